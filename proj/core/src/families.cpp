#include "ccgeo/families.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ccgeo {

namespace {

VectorField poly_field(int n, const std::vector<std::string>& exprs) {
  std::vector<Poly> ps;
  ps.reserve(exprs.size());
  for (const auto& e : exprs) ps.push_back(Poly::parse(e, n));
  return make_poly_field(std::move(ps), {});
}

Family euclid2in3() {
  Family f;
  f.dim = 3;
  f.step = 1;
  f.domain_box = Box::cube(3, 6.0);
  f.horizontal = {poly_field(3, {"1", "0", "0"}), poly_field(3, {"0", "1", "0"})};
  for (std::size_t j = 0; j < f.horizontal.size(); ++j) {
    f.horizontal[j].word = {static_cast<int>(j) + 1};
    f.horizontal[j].length = 1;
  }
  return f;
}

Family heisenberg() {
  Family f;
  f.dim = 3;
  f.step = 2;
  f.domain_box = Box::cube(3, 4.0);
  f.horizontal = {poly_field(3, {"1", "0", "-0.5*x2"}),
                  poly_field(3, {"0", "1", "0.5*x1"})};
  f.horizontal[0].word = {1};
  f.horizontal[0].length = 1;
  f.horizontal[1].word = {2};
  f.horizontal[1].length = 1;
  return f;
}

Family grushin() {
  Family f;
  f.dim = 2;
  f.step = 2;
  f.domain_box = Box::cube(2, 6.0);
  f.horizontal = {poly_field(2, {"1", "0"}), poly_field(2, {"0", "x1"})};
  f.horizontal[0].word = {1};
  f.horizontal[0].length = 1;
  f.horizontal[1].word = {2};
  f.horizontal[1].length = 1;
  return f;
}

Family martinet() {
  Family f;
  f.dim = 3;
  f.step = 3;
  f.domain_box = Box::cube(3, 4.0);
  f.horizontal = {poly_field(3, {"1", "0", "0"}),
                  poly_field(3, {"0", "1", "x1^2"})};
  f.horizontal[0].word = {1};
  f.horizontal[0].length = 1;
  f.horizontal[1].word = {2};
  f.horizontal[1].length = 1;
  return f;
}

Family shear() {
  Family f;
  f.dim = 3;
  f.step = 2;
  f.domain_box = Box::cube(3, 4.0);
  f.horizontal = {poly_field(3, {"1", "0", "0"}),
                  poly_field(3, {"0", "x3", "0"})};
  f.horizontal[0].word = {1};
  f.horizontal[0].length = 1;
  f.horizontal[1].word = {2};
  f.horizontal[1].length = 1;
  return f;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"euclid2in3", "heisenberg", "grushin", "martinet", "shear"};
}

BuiltinFamily make_builtin(const std::string& name) {
  BuiltinFamily b;
  b.name = name;
  if (name == "euclid2in3") {
    b.family = euclid2in3();
    b.guards = {1.0, 4.0, 0.9, 0.8, 0.9, 0.45, 0.6, 1.2};
    b.base_point = vec3(0.1, -0.2, 0.5);
  } else if (name == "heisenberg") {
    b.family = heisenberg();
    b.guards = {0.2, 2.0, 0.35, 0.15, 0.35, 0.12, 0.2, 1.3};
    b.base_point = vec3(0.0, 0.0, 0.0);
  } else if (name == "grushin") {
    b.family = grushin();
    b.guards = {0.2, 2.0, 0.35, 0.15, 0.35, 0.12, 0.2, 1.3};
    b.base_point = vec2(0.0, 0.0);
  } else if (name == "martinet") {
    b.family = martinet();
    b.guards = {0.15, 2.0, 0.25, 0.1, 0.25, 0.08, 0.12, 1.3};
    b.base_point = vec3(0.0, 0.0, 0.0);
  } else if (name == "shear") {
    b.family = shear();
    b.guards = {0.5, 3.0, 0.7, 0.5, 0.6, 0.3, 0.4, 1.2};
    b.base_point = vec3(0.25, 0.4, 1.0);
  } else {
    throw ArgumentError("unknown family \"" + name + "\"");
  }
  b.family.validate();
  return b;
}

Family family_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("family JSON parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ArgumentError("family JSON must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "dim" && key != "step" && key != "fields" && key != "domain_box")
      throw ArgumentError("unknown family key \"" + key + "\"");
  }
  if (!doc.contains("dim") || !doc.contains("step") || !doc.contains("fields"))
    throw ArgumentError("family JSON needs dim, step and fields");

  Family fam;
  fam.dim = doc["dim"].get<int>();
  fam.step = doc["step"].get<int>();
  if (fam.dim < 1 || fam.dim > kMaxDim)
    throw ArgumentError("family dim must be in [1, " + std::to_string(kMaxDim) + "]");

  int letter = 1;
  for (const auto& fj : doc["fields"]) {
    if (!fj.is_object() || !fj.contains("coeffs"))
      throw ArgumentError("each field needs a \"coeffs\" array");
    for (const auto& [key, _] : fj.items())
      if (key != "coeffs") throw ArgumentError("unknown field key \"" + key + "\"");
    std::vector<std::string> exprs = fj["coeffs"].get<std::vector<std::string>>();
    if (static_cast<int>(exprs.size()) != fam.dim)
      throw ArgumentError("field coeffs must have dim entries");
    VectorField f = poly_field(fam.dim, exprs);
    f.word = {letter++};
    f.length = 1;
    fam.horizontal.push_back(std::move(f));
  }

  if (doc.contains("domain_box")) {
    const auto& bj = doc["domain_box"];
    if (static_cast<int>(bj.size()) != fam.dim)
      throw ArgumentError("domain_box must have dim entries");
    Vec lo(fam.dim), hi(fam.dim);
    for (int i = 0; i < fam.dim; ++i) {
      lo[i] = bj[i][0].get<double>();
      hi[i] = bj[i][1].get<double>();
      if (!(lo[i] < hi[i])) throw ArgumentError("domain_box entries must satisfy lo < hi");
    }
    fam.domain_box = Box(lo, hi);
  } else {
    fam.domain_box = Box::cube(fam.dim, 4.0);
  }
  fam.validate();
  return fam;
}

BuiltinFamily resolve_family(const std::string& spec) {
  for (const auto& n : builtin_names()) {
    if (spec == n) return make_builtin(n);
  }
  BuiltinFamily b;
  std::string text = spec;
  if (!spec.empty() && spec[0] != '{') {
    std::ifstream in(spec);
    if (!in) throw ArgumentError("family \"" + spec + "\" is not a built-in and not a readable file");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    b.name = spec;
  } else {
    b.name = "custom";
  }
  b.family = family_from_json(text);
  // Conservative defaults for user families.
  b.guards = GuardConstants{};
  b.base_point = Vec::Zero(b.family.dim);
  return b;
}

}  // namespace ccgeo
