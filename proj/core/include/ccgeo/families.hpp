#ifndef CCGEO_FAMILIES_HPP
#define CCGEO_FAMILIES_HPP

#include <string>

#include "ccgeo/fields.hpp"

namespace ccgeo {

/// Per-family small constants (domain guards and box/ball radii) found
/// empirically: each is roughly the largest value at which the associated
/// estimate still holds on the family's box, then rounded down.
struct GuardConstants {
  double r0 = 0.1;     // largest tuple-scaling radius
  double t0 = 1.0;     // flow-time guard for approximate exponentials
  double eps0 = 0.3;   // box radius for the frame expansion
  double eps1 = 0.15;  // box radius certified injective
  double eta1 = 0.3;   // Euclidean radius for the pullback frame
  double eta2 = 0.15;  // bi-Lipschitz radius of Psi
  double eta3 = 0.2;   // radius for lifting Phi through E
  double cover_eps = 1.3;  // box radius whose image covers the unit-metric ball
};

struct BuiltinFamily {
  std::string name;
  Family family;
  GuardConstants guards;
  Vec base_point;
};

/// Families addressable by name: euclid2in3, heisenberg, grushin, martinet,
/// shear.  Throws ArgumentError for unknown names.
BuiltinFamily make_builtin(const std::string& name);
std::vector<std::string> builtin_names();

/// Loads {"dim": n, "step": s, "fields": [{"coeffs": [expr...]}...],
/// "domain_box": [[lo,hi]...]} with polynomial coefficient expressions in
/// x1..xn.  Unknown keys are rejected.
Family family_from_json(const std::string& json_text);

/// Resolves a --family argument: a built-in name, inline JSON (leading '{'),
/// or a path to a JSON document.
BuiltinFamily resolve_family(const std::string& spec);

}  // namespace ccgeo

#endif  // CCGEO_FAMILIES_HPP
