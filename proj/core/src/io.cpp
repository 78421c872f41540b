#include "r3bp/io.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

using nlohmann::json;

namespace r3bp::io {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string config_hash(const std::string& canonical_config) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : canonical_config) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string read_hash_line(std::istream& in) {
    std::string line;
    if (std::getline(in, line) && line.rfind("# config_hash=", 0) == 0)
        return line.substr(14);
    return "";
}

void check_hash(const std::string& found, const std::string& expected,
                const std::string& path) {
    if (!expected.empty() && found != expected)
        throw std::runtime_error("stale cache rejected (config hash mismatch): " + path);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return f;
}

}  // namespace

void write_family_csv(const std::string& path, const Family& fam, const std::string& hash) {
    auto f = open_out(path);
    f << "# config_hash=" << hash << "\n";
    f << "# interval=" << fmt(fam.x_lo) << ":" << fmt(fam.x_hi) << "\n";
    f << "x_star,kappa,period,energy\n";
    for (const auto& m : fam.members)
        f << fmt(m.x_star) << "," << fmt(m.kappa) << "," << fmt(m.period) << ","
          << fmt(m.energy) << "\n";
}

Family read_family_csv(const std::string& path, const std::string& expected_hash,
                       std::string* found_hash) {
    auto f = open_in(path);
    const std::string hash = read_hash_line(f);
    if (found_hash) *found_hash = hash;
    check_hash(hash, expected_hash, path);

    Family fam;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') {
            if (line.rfind("# interval=", 0) == 0) {
                const auto colon = line.find(':', 11);
                fam.x_lo = std::stod(line.substr(11, colon - 11));
                fam.x_hi = std::stod(line.substr(colon + 1));
            }
            continue;
        }
        if (line.rfind("x_star", 0) == 0) continue;
        const auto cols = split_csv(line);
        if (cols.size() != 4) throw std::runtime_error("malformed family row: " + line);
        LyapunovOrbit o;
        o.x_star = std::stod(cols[0]);
        o.kappa = std::stod(cols[1]);
        o.period = std::stod(cols[2]);
        o.energy = std::stod(cols[3]);
        fam.members.push_back(o);
    }
    return fam;
}

void write_homoclinics_csv(const std::string& path,
                           const std::vector<HomoclinicRecord>& records,
                           const std::string& hash) {
    auto f = open_out(path);
    f << "# config_hash=" << hash << "\n";
    f << "x_star,branch,px_crossing_index,h,tau,omega,"
         "p_x,p_y,p_px,p_py,"
         "v_1,v_2,v_3,v_4,"
         "dp_1,dp_2,dp_3,dp_4,"
         "f_1,f_2,f_3,f_4,"
         "transversality_sigma_min,transversality_pass\n";
    for (const auto& r : records) {
        const auto& hp = r.point;
        f << fmt(r.x_star) << "," << hp.branch << "," << hp.crossing_index << ","
          << fmt(hp.h) << "," << fmt(hp.tau) << "," << fmt(hp.omega);
        const auto pa = hp.point.to_array();
        for (double v : pa) f << "," << fmt(v);
        for (int i = 0; i < 4; ++i) f << "," << fmt(hp.tangent(i));
        for (int i = 0; i < 4; ++i) f << "," << fmt(r.spans.dp_dxstar(i));
        for (int i = 0; i < 4; ++i) f << "," << fmt(r.spans.flow_dir(i));
        f << "," << fmt(r.transversality.sigma_min) << ","
          << (r.transversality.pass ? 1 : 0) << "\n";
    }
}

std::vector<HomoclinicRecord> read_homoclinics_csv(const std::string& path,
                                                   const std::string& expected_hash,
                                                   std::string* found_hash) {
    auto f = open_in(path);
    const std::string hash = read_hash_line(f);
    if (found_hash) *found_hash = hash;
    check_hash(hash, expected_hash, path);

    std::vector<HomoclinicRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("x_star", 0) == 0) continue;
        const auto cols = split_csv(line);
        if (cols.size() != 24) throw std::runtime_error("malformed homoclinic row: " + line);
        HomoclinicRecord r;
        r.x_star = std::stod(cols[0]);
        r.point.branch = std::stoi(cols[1]);
        r.point.crossing_index = std::stoi(cols[2]);
        r.point.h = std::stod(cols[3]);
        r.point.tau = std::stod(cols[4]);
        r.point.omega = std::stod(cols[5]);
        r.point.point = State4{std::stod(cols[6]), std::stod(cols[7]), std::stod(cols[8]),
                               std::stod(cols[9])};
        for (int i = 0; i < 4; ++i) r.point.tangent(i) = std::stod(cols[10 + i]);
        for (int i = 0; i < 4; ++i) r.spans.dp_dxstar(i) = std::stod(cols[14 + i]);
        for (int i = 0; i < 4; ++i) r.spans.flow_dir(i) = std::stod(cols[18 + i]);
        r.transversality.sigma_min = std::stod(cols[22]);
        r.transversality.pass = std::stoi(cols[23]) != 0;
        out.push_back(r);
    }
    return out;
}

void write_samples_csv(const std::string& path, const std::vector<MelnikovSample>& samples,
                       const std::string& hash) {
    auto f = open_out(path);
    f << "# config_hash=" << hash << "\n";
    f << "x_star,theta,tau,i,j,value,error,accepted,reject_reason\n";
    for (const auto& s : samples) {
        f << fmt(s.x_star) << "," << fmt(s.theta) << "," << fmt(s.tau) << "," << s.branch_i
          << "," << s.channel_j << "," << fmt(s.value) << "," << fmt(s.error) << ","
          << (s.accepted ? 1 : 0) << "," << s.reject_reason << "\n";
    }
}

void write_certificate_json(const std::string& path, const Certificate& cert,
                            const std::string& hash) {
    json j;
    j["schema"] = 1;
    j["config_hash"] = hash;
    j["pass"] = cert.pass;
    j["tau"] = cert.tau;
    j["margin_floor"] = cert.margin_floor;
    j["min_positive_margin"] = cert.min_positive_margin;
    j["max_negative_margin"] = cert.max_negative_margin;
    j["rejected_samples"] = cert.rejected_samples;
    j["nodes"] = json::array();
    for (const auto& n : cert.nodes) {
        j["nodes"].push_back({{"x_star", n.x_star},
                              {"theta", n.theta},
                              {"has_positive", n.has_positive},
                              {"has_negative", n.has_negative},
                              {"pos_witness", {n.pos_i, n.pos_j}},
                              {"neg_witness", {n.neg_i, n.neg_j}},
                              {"pos_value", n.pos_value},
                              {"neg_value", n.neg_value}});
    }
    auto f = open_out(path);
    f << j.dump(2) << "\n";
}

}  // namespace r3bp::io
