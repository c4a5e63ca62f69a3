#pragma once

#include "cmn/dynamics.hpp"
#include "cmn/network.hpp"

#include <json.hpp>

#include <string>

namespace cmn::io {

using json = nlohmann::json;

inline constexpr const char* kFormatVersion = "1";
inline constexpr const char* kToolName = "cmnverify";
inline constexpr const char* kToolVersion = "1.0.0";

// A spec document that cannot be read. `pointer` is a JSON pointer for
// semantic errors; line and column are set for syntax errors.
class SpecError : public Error {
 public:
  SpecError(const std::string& msg, std::string pointer, int line = 0, int column = 0);
  const std::string& pointer() const { return pointer_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::string pointer_;
  int line_;
  int column_;
};

// Reals are JSON numbers, decimal strings, "p/q" rationals or "inf"/"-inf".
// Rationals with |p|, |q| < 2^53 are correctly rounded; others go through long double.
double parse_real(const json& v, const std::string& pointer);

json parse_text(const std::string& text);
json read_file(const std::string& path);

NetworkSpec spec_from_json(const json& doc);
json spec_to_json(const NetworkSpec& spec);
NetworkSpec load_spec(const std::string& path);

json map_to_json(const PiecewiseAffineMap& f);
PiecewiseAffineMap map_from_json(const json& v, const std::string& pointer);

// "sha256:" followed by the digest of the canonical (sorted-key, compact) dump.
std::string digest(const json& doc);
std::string canonical_dump(const json& doc);

// Reals in reports: finite values as numbers, infinities as "inf"/"-inf".
json real_to_json(double v);

json report_to_json(const TheoremReport& report);
json orbit_to_json(const PeriodicOrbitCertificate& cert);
json certificate_document(const std::string& spec_digest, const TheoremReport& report,
                          const std::vector<PeriodicOrbitCertificate>& orbits = {});

}  // namespace cmn::io
