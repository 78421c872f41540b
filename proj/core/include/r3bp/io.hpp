#ifndef R3BP_IO_HPP
#define R3BP_IO_HPP

#include <string>
#include <vector>

#include "r3bp/manifolds.hpp"
#include "r3bp/melnikov.hpp"
#include "r3bp/orbits.hpp"

namespace r3bp::io {

/// FNV-1a hash of a canonical config string; embedded in every artifact so
/// stale caches are rejected instead of silently reused.
std::string config_hash(const std::string& canonical_config);

void write_family_csv(const std::string& path, const Family& fam,
                      const std::string& hash);
/// Throws if expected_hash is nonempty and does not match the file.
Family read_family_csv(const std::string& path, const std::string& expected_hash = "",
                       std::string* found_hash = nullptr);

void write_homoclinics_csv(const std::string& path,
                           const std::vector<HomoclinicRecord>& records,
                           const std::string& hash);
std::vector<HomoclinicRecord> read_homoclinics_csv(const std::string& path,
                                                   const std::string& expected_hash = "",
                                                   std::string* found_hash = nullptr);

void write_samples_csv(const std::string& path, const std::vector<MelnikovSample>& samples,
                       const std::string& hash);

void write_certificate_json(const std::string& path, const Certificate& cert,
                            const std::string& hash);

/// Format a double so it round-trips exactly.
std::string fmt(double v);

}  // namespace r3bp::io

#endif
