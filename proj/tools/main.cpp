// Command-line front end: scans the Lyapunov family, locates the symmetric
// homoclinic points, evaluates the scattering-map derivative on a grid, and
// emits the sign-cover certificate plus plot data. Intermediate artifacts are
// cached as CSV with an embedded config hash; a stale cache is rejected, never
// silently reused.
//
// Exit codes: 0 pass / success, 1 certificate computed but cover fails,
// 2 computation incomplete (solver breakdown, missing or stale cache, too many
// rejected samples), 3 I/O failure, 64 usage error.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "r3bp/dynamics.hpp"
#include "r3bp/io.hpp"
#include "r3bp/manifolds.hpp"
#include "r3bp/melnikov.hpp"
#include "r3bp/orbits.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCertFail = 1;
constexpr int kExitIncomplete = 2;
constexpr int kExitIo = 3;
constexpr int kExitUsage = 64;

struct CommonOpts {
    double mu = 0.0009537;
    std::string interval = "-0.955:-0.945";
    int nodes = 5;
    std::string out = ".";

    double x_lo = 0.0;
    double x_hi = 0.0;

    // Parses "lo:hi"; throws CLI::ValidationError on a malformed or empty interval.
    void resolve() {
        const auto colon = interval.find(':');
        if (colon == std::string::npos)
            throw CLI::ValidationError("--interval", "expected lo:hi");
        try {
            x_lo = std::stod(interval.substr(0, colon));
            x_hi = std::stod(interval.substr(colon + 1));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--interval", "expected numeric lo:hi");
        }
        if (!(x_lo < x_hi)) throw CLI::ValidationError("--interval", "requires lo < hi");
        if (nodes < 1) throw CLI::ValidationError("--nodes", "must be >= 1");
    }

    std::string family_hash() const {
        return r3bp::io::config_hash("family|mu=" + r3bp::io::fmt(mu) +
                                     "|lo=" + r3bp::io::fmt(x_lo) +
                                     "|hi=" + r3bp::io::fmt(x_hi) +
                                     "|nodes=" + std::to_string(nodes));
    }
    std::string homoclinics_hash() const {
        return r3bp::io::config_hash("homoclinics|parent=" + family_hash());
    }
    std::string certify_hash(double tau, int grid, double margin_floor) const {
        return r3bp::io::config_hash("certify|parent=" + homoclinics_hash() +
                                     "|tau=" + r3bp::io::fmt(tau) +
                                     "|grid=" + std::to_string(grid) +
                                     "|margin_floor=" + r3bp::io::fmt(margin_floor));
    }

    std::string path(const std::string& name) const {
        return (std::filesystem::path(out) / name).string();
    }
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--mu", c.mu, "mass ratio")->capture_default_str();
    cmd->add_option("--interval", c.interval, "family interval lo:hi in x*")
        ->capture_default_str();
    cmd->add_option("--nodes", c.nodes, "number of family nodes")->capture_default_str();
    cmd->add_option("--out", c.out, "output directory")
        ->envname("R3BP_OUT")
        ->capture_default_str();
}

bool is_cache_miss(const std::runtime_error& e) {
    const std::string w = e.what();
    return w.find("cannot open for reading") != std::string::npos ||
           w.find("stale cache") != std::string::npos;
}

// ---------------------------------------------------------------------------

int cmd_scan_family(const CommonOpts& c) {
    r3bp::SystemParams p;
    p.mu = c.mu;
    p.validate();
    r3bp::CorrectorConfig cc;
    r3bp::Family fam;
    try {
        fam = r3bp::scan_family(c.x_lo, c.x_hi, c.nodes, p, cc);
    } catch (const r3bp::SolverError& e) {
        std::cerr << "continuation breakdown: " << e.what() << "\n";
        return kExitIncomplete;
    }
    r3bp::io::write_family_csv(c.path("family.csv"), fam, c.family_hash());
    std::cout << "family.csv: " << fam.members.size() << " nodes over ["
              << r3bp::io::fmt(c.x_lo) << ", " << r3bp::io::fmt(c.x_hi) << "]\n";
    return kExitPass;
}

std::vector<r3bp::HomoclinicRecord> compute_homoclinics(const r3bp::Family& fam,
                                                        const r3bp::SystemParams& p,
                                                        int branch_filter,
                                                        int* failures) {
    r3bp::CorrectorConfig cc;
    r3bp::HomoclinicSearchConfig hc;
    r3bp::FlowConfig fc;
    std::vector<r3bp::HomoclinicRecord> records;
    for (const auto& orb : fam.members) {
        try {
            const auto mono = r3bp::monodromy(orb, p, fc);
            const auto pts = r3bp::find_symmetric_homoclinics(orb, mono, p, hc);
            for (const auto& hp : pts) {
                if (branch_filter != 0 && hp.branch != branch_filter) continue;
                r3bp::HomoclinicRecord r;
                r.x_star = orb.x_star;
                r.point = hp;
                r.spans = r3bp::channel_tangent_spans(hp, fam, p, cc, hc);
                r.transversality = r3bp::check_transversality(hp, r.spans);
                records.push_back(r);
            }
        } catch (const r3bp::SolverError& e) {
            std::cerr << "warning: x*=" << r3bp::io::fmt(orb.x_star)
                      << " homoclinic solve failed: " << e.what() << "\n";
            ++*failures;
        }
    }
    return records;
}

int cmd_homoclinics(const CommonOpts& c, int branch_filter) {
    r3bp::SystemParams p;
    p.mu = c.mu;
    p.validate();
    r3bp::Family fam;
    try {
        fam = r3bp::io::read_family_csv(c.path("family.csv"), c.family_hash());
    } catch (const std::runtime_error& e) {
        if (is_cache_miss(e)) {
            std::cerr << "family cache unusable (run scan-family first): " << e.what() << "\n";
            return kExitIncomplete;
        }
        throw;
    }
    int failures = 0;
    const auto records = compute_homoclinics(fam, p, branch_filter, &failures);
    r3bp::io::write_homoclinics_csv(c.path("homoclinics.csv"), records,
                                    c.homoclinics_hash());
    std::cout << "homoclinics.csv: " << records.size() << " rows";
    if (failures > 0) std::cout << " (" << failures << " node(s) failed, see warnings)";
    std::cout << "\n";
    return kExitPass;
}

// One gnuplot block per x*, blank-line separated; within a block one line per
// grid theta of the channel's domain representative.
void write_melnikov_curves(const CommonOpts& c, const std::vector<r3bp::MelnikovSample>& samples) {
    for (const auto& ch : r3bp::standard_channels()) {
        const std::string name = "melnikov_i" + std::to_string(ch.branch_i) + "_j" +
                                 std::to_string(ch.index_j) + ".dat";
        std::ofstream f(c.path(name));
        if (!f) throw std::runtime_error("cannot open for writing: " + c.path(name));
        f << "# scattering-map derivative curve, channel (i=" << ch.branch_i
          << ", j=" << ch.index_j << "), blocks ordered by x_star\n";
        f << "# columns: x_star theta value error accepted\n";
        double last_x = std::nan("");
        for (const auto& s : samples) {
            if (s.branch_i != ch.branch_i || s.channel_j != ch.index_j) continue;
            if (!std::isnan(last_x) && s.x_star != last_x) f << "\n";
            last_x = s.x_star;
            f << r3bp::io::fmt(s.x_star) << " " << r3bp::io::fmt(s.theta) << " "
              << r3bp::io::fmt(s.value) << " " << r3bp::io::fmt(s.error) << " "
              << (s.accepted ? 1 : 0) << "\n";
        }
    }
}

int cmd_certify(const CommonOpts& c, double tau, int grid, double margin_floor, int jobs) {
    if (grid < 1) throw CLI::ValidationError("--theta-grid", "must be >= 1");
    if (jobs < 1) throw CLI::ValidationError("--jobs", "must be >= 1");
    r3bp::SystemParams p;
    p.mu = c.mu;
    p.validate();

    r3bp::Family fam;
    std::vector<r3bp::HomoclinicRecord> records;
    try {
        fam = r3bp::io::read_family_csv(c.path("family.csv"), c.family_hash());
        records = r3bp::io::read_homoclinics_csv(c.path("homoclinics.csv"),
                                                 c.homoclinics_hash());
    } catch (const std::runtime_error& e) {
        if (is_cache_miss(e)) {
            std::cerr << "cache unusable (run scan-family and homoclinics first): "
                      << e.what() << "\n";
            return kExitIncomplete;
        }
        throw;
    }

    std::map<double, std::vector<r3bp::HomoclinicPoint>> homs;
    for (const auto& r : records) homs[r.x_star].push_back(r.point);

    std::vector<double> theta_grid(grid);
    for (int k = 0; k < grid; ++k) theta_grid[k] = k * 2.0 * M_PI / grid;

    r3bp::QuadratureConfig qc;
    const auto samples = r3bp::grid_evaluate(fam, homs, theta_grid, tau, p, qc, jobs);
    const auto cert = r3bp::verify_sign_cover(samples, margin_floor);

    const std::string hash = c.certify_hash(tau, grid, margin_floor);
    r3bp::io::write_samples_csv(c.path("melnikov.csv"), samples, hash);
    r3bp::io::write_certificate_json(c.path("certificate.json"), cert, hash);
    write_melnikov_curves(c, samples);

    const double reject_frac =
        samples.empty() ? 1.0
                        : double(cert.rejected_samples) / double(samples.size());
    std::cout << "certificate: " << (cert.pass ? "PASS" : "FAIL")
              << "  nodes=" << cert.nodes.size()
              << "  rejected=" << cert.rejected_samples << "/" << samples.size()
              << "  min_pos=" << r3bp::io::fmt(cert.min_positive_margin)
              << "  max_neg=" << r3bp::io::fmt(cert.max_negative_margin) << "\n";
    if (reject_frac > 0.01) {
        std::cerr << "rejected samples above 1% of the grid\n";
        return kExitIncomplete;
    }
    return cert.pass ? kExitPass : kExitCertFail;
}

// ---------------------------------------------------------------------------

// Energy level used for the accessibility plot: the comet-like level of the
// Lyapunov family midpoint, matching the two-neck bottleneck topology.
void write_hill_region(const CommonOpts& c, const r3bp::SystemParams& p) {
    const double h = -1.515;
    std::ofstream f(c.path("hill_region.dat"));
    if (!f) throw std::runtime_error("cannot open for writing: " + c.path("hill_region.dat"));
    f << "# accessibility grid at H = " << r3bp::io::fmt(h) << "\n";
    f << "# columns: x y accessible(0/1), blocks by x for gnuplot pm3d\n";
    const int n = 401;
    for (int i = 0; i < n; ++i) {
        const double x = -1.6 + 3.2 * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double y = -1.6 + 3.2 * j / (n - 1);
            int acc = 0;
            try {
                acc = r3bp::hill_region_contains(x, y, h, p) ? 1 : 0;
            } catch (const r3bp::SingularityError&) {
                acc = 1;  // on top of a primary: inside the accessible well
            }
            f << r3bp::io::fmt(x) << " " << r3bp::io::fmt(y) << " " << acc << "\n";
        }
        f << "\n";
    }
}

void write_family_orbits(const CommonOpts& c, const r3bp::Family& fam,
                         const r3bp::SystemParams& p) {
    r3bp::FlowConfig fc;
    std::ofstream f(c.path("family_orbits.dat"));
    if (!f) throw std::runtime_error("cannot open for writing: " + c.path("family_orbits.dat"));
    f << "# Lyapunov orbits, one block per family node\n";
    f << "# columns: x y\n";
    const int n = 400;
    for (const auto& orb : fam.members) {
        for (int k = 0; k <= n; ++k) {
            const auto s = r3bp::flow(orb.seed(), orb.period * k / n, p, fc);
            f << r3bp::io::fmt(s.x) << " " << r3bp::io::fmt(s.y) << "\n";
        }
        f << "\n";
    }
}

void write_period_energy(const CommonOpts& c, const r3bp::Family& fam) {
    std::ofstream f(c.path("period_energy.dat"));
    if (!f) throw std::runtime_error("cannot open for writing: " + c.path("period_energy.dat"));
    f << "# columns: x_star period energy\n";
    for (const auto& m : fam.members)
        f << r3bp::io::fmt(m.x_star) << " " << r3bp::io::fmt(m.period) << " "
          << r3bp::io::fmt(m.energy) << "\n";
}

int cmd_plots(const CommonOpts& c, const std::vector<std::string>& select) {
    r3bp::SystemParams p;
    p.mu = c.mu;
    p.validate();
    std::set<std::string> want;
    for (const auto& s : select) {
        if (s.empty() || s == " " || s == "none") continue;  // explicit empty selection
        if (s != "hill" && s != "family" && s != "period-energy")
            throw CLI::ValidationError("--select", "unknown plot: " + s);
        want.insert(s);
    }
    if (want.empty()) return kExitPass;  // empty selection: no files

    if (want.count("hill")) write_hill_region(c, p);
    if (want.count("family") || want.count("period-energy")) {
        r3bp::Family fam;
        try {
            fam = r3bp::io::read_family_csv(c.path("family.csv"), c.family_hash());
        } catch (const std::runtime_error& e) {
            if (is_cache_miss(e)) {
                std::cerr << "family cache unusable (run scan-family first): " << e.what()
                          << "\n";
                return kExitIncomplete;
            }
            throw;
        }
        if (want.count("family")) write_family_orbits(c, fam, p);
        if (want.count("period-energy")) write_period_energy(c, fam);
    }
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lyapunov family, symmetric homoclinics, and the scattering-map "
                 "sign-cover certificate for the planar restricted three-body problem"};
    app.require_subcommand(1);

    CommonOpts cs, ch, cc, cp;
    auto* scan = app.add_subcommand("scan-family", "continue the Lyapunov family over an interval");
    add_common(scan, cs);

    auto* hom = app.add_subcommand("homoclinics", "locate symmetric homoclinic points and channel data");
    add_common(hom, ch);
    int branch_filter = 0;
    hom->add_option("--branch", branch_filter, "restrict to one branch (1 or 2); 0 = both")
        ->check(CLI::Range(0, 2))
        ->capture_default_str();

    auto* cert = app.add_subcommand("certify", "evaluate the derivative grid and the sign-cover certificate");
    add_common(cert, cc);
    double tau = 0.0, margin_floor = 0.0;
    int theta_grid = 256, jobs = 1;
    cert->add_option("--tau", tau, "perturbation phase")->capture_default_str();
    cert->add_option("--theta-grid", theta_grid, "number of theta grid points")
        ->capture_default_str();
    cert->add_option("--margin-floor", margin_floor,
                     "fixed margin requirement (0 = 10x per-sample error)")
        ->capture_default_str();
    cert->add_option("--jobs", jobs, "worker threads")->capture_default_str();

    auto* plots = app.add_subcommand("plots", "write gnuplot-ready data files");
    add_common(plots, cp);
    std::vector<std::string> select{"hill", "family", "period-energy"};
    plots->add_option("--select", select, "plots to write: hill family period-energy")
        ->delimiter(',')
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (scan->parsed()) {
            cs.resolve();
            return cmd_scan_family(cs);
        }
        if (hom->parsed()) {
            ch.resolve();
            return cmd_homoclinics(ch, branch_filter);
        }
        if (cert->parsed()) {
            cc.resolve();
            return cmd_certify(cc, tau, theta_grid, margin_floor, jobs);
        }
        cp.resolve();
        return cmd_plots(cp, select);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const r3bp::SolverError& e) {
        std::cerr << e.what() << "\n";
        return kExitIncomplete;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitIo;
    }
}
