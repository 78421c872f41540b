#ifndef R3BP_TESTS_FIXTURE_HPP
#define R3BP_TESTS_FIXTURE_HPP

#include <map>
#include <vector>

#include "r3bp/manifolds.hpp"
#include "r3bp/melnikov.hpp"
#include "r3bp/orbits.hpp"

namespace fixture {

// One shared pipeline run (family scan + homoclinic search over the standard
// five-node interval) reused across test cases; building it costs seconds, so
// it is computed once per binary on first use.
struct Pipeline {
    r3bp::SystemParams params;
    r3bp::CorrectorConfig corrector;
    r3bp::HomoclinicSearchConfig search;
    r3bp::QuadratureConfig quad;
    r3bp::Family family;
    std::map<double, r3bp::MonodromyData> monodromies;
    std::map<double, std::vector<r3bp::HomoclinicPoint>> homoclinics;

    const r3bp::LyapunovOrbit& reference() const { return family.nearest(-0.95); }
    const r3bp::MonodromyData& reference_monodromy() const {
        return monodromies.at(reference().x_star);
    }
    const r3bp::HomoclinicPoint& point(int branch) const {
        for (const auto& hp : homoclinics.at(reference().x_star))
            if (hp.branch == branch) return hp;
        throw std::runtime_error("missing homoclinic branch");
    }
};

inline const Pipeline& pipeline() {
    static const Pipeline pipe = [] {
        Pipeline f;
        f.family = r3bp::scan_family(-0.955, -0.945, 5, f.params, f.corrector);
        for (const auto& orb : f.family.members) {
            auto mono = r3bp::monodromy(orb, f.params, f.quad.flow);
            f.homoclinics[orb.x_star] =
                r3bp::find_symmetric_homoclinics(orb, mono, f.params, f.search);
            f.monodromies[orb.x_star] = std::move(mono);
        }
        return f;
    }();
    return pipe;
}

}  // namespace fixture

#endif
