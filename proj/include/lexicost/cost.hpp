#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lexicost/errors.hpp"
#include "lexicost/evaluator.hpp"

namespace lexicost {

/// One lexicographic level: fp·a_fp + fn·b_fn + size·c_size with 0/1 weights.
struct LinearComponent {
  bool a_fp = false;
  bool b_fn = false;
  bool c_size = false;

  bool operator==(const LinearComponent&) const = default;

  std::int64_t apply(std::int64_t fp, std::int64_t fn, std::int64_t size) const noexcept {
    return (a_fp ? fp : 0) + (b_fn ? fn : 0) + (c_size ? size : 0);
  }
};

using CostVector = std::vector<std::int64_t>;

struct CostSpec {
  std::string name;
  std::vector<LinearComponent> components;

  bool uses_size() const noexcept {
    for (const auto& c : components)
      if (c.c_size) return true;
    return false;
  }

  bool operator==(const CostSpec&) const = default;
};

namespace costs {

inline constexpr LinearComponent kFp{true, false, false};
inline constexpr LinearComponent kFn{false, true, false};
inline constexpr LinearComponent kSize{false, false, true};
inline constexpr LinearComponent kErrors{true, true, false};
inline constexpr LinearComponent kMdl{true, true, true};

inline CostSpec error() { return {"error", {kErrors}}; }
inline CostSpec errorsize() { return {"errorsize", {kErrors, kSize}}; }
inline CostSpec fnfp() { return {"fnfp", {kFn, kFp}}; }
inline CostSpec fnfpsize() { return {"fnfpsize", {kFn, kFp, kSize}}; }
inline CostSpec fpfn() { return {"fpfn", {kFp, kFn}}; }
inline CostSpec fpfnsize() { return {"fpfnsize", {kFp, kFn, kSize}}; }
inline CostSpec mdl() { return {"mdl", {kMdl}}; }

/// The seven named cost functions, in a fixed order.
inline std::vector<CostSpec> all() {
  return {error(), errorsize(), fnfp(), fnfpsize(), fpfn(), fpfnsize(), mdl()};
}

}  // namespace costs

/// Accepts the seven names or `custom:<level>,<level>,...` where each level
/// is a `+`-joined subset of {fp, fn, size}.
inline CostSpec parse_cost_spec(std::string_view text) {
  for (auto& spec : costs::all())
    if (spec.name == text) return spec;

  constexpr std::string_view prefix = "custom:";
  if (text.substr(0, prefix.size()) != prefix)
    throw std::invalid_argument("unknown cost function '" + std::string(text) + "'");
  std::string_view body = text.substr(prefix.size());

  CostSpec spec{"custom", {}};
  std::size_t start = 0;
  while (start <= body.size()) {
    auto comma = body.find(',', start);
    auto level = body.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                    : comma - start);
    LinearComponent c;
    std::size_t t0 = 0;
    while (t0 <= level.size()) {
      auto plus = level.find('+', t0);
      auto term = level.substr(t0, plus == std::string_view::npos ? std::string_view::npos
                                                                   : plus - t0);
      bool* slot = term == "fp" ? &c.a_fp : term == "fn" ? &c.b_fn : term == "size" ? &c.c_size
                                                                                   : nullptr;
      if (!slot || *slot)
        throw std::invalid_argument("bad cost term '" + std::string(term) + "' in '" +
                                    std::string(text) + "'");
      *slot = true;
      if (plus == std::string_view::npos) break;
      t0 = plus + 1;
    }
    spec.components.push_back(c);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return spec;
}

/// Inverse of parse_cost_spec for custom specs; named specs print their name.
inline std::string format_cost_spec(const CostSpec& spec) {
  if (spec.name != "custom") return spec.name;
  std::string out = "custom:";
  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    if (i) out += ',';
    const auto& c = spec.components[i];
    std::string level;
    auto add = [&](bool on, const char* term) {
      if (!on) return;
      if (!level.empty()) level += '+';
      level += term;
    };
    add(c.a_fp, "fp");
    add(c.b_fn, "fn");
    add(c.c_size, "size");
    out += level;
  }
  return out;
}

inline CostVector evaluate(const CostSpec& spec, const Confusion& conf, std::size_t size) {
  CostVector out;
  out.reserve(spec.components.size());
  for (const auto& c : spec.components)
    out.push_back(c.apply(static_cast<std::int64_t>(conf.fp), static_cast<std::int64_t>(conf.fn),
                          static_cast<std::int64_t>(size)));
  return out;
}

inline std::strong_ordering compare(const CostVector& a, const CostVector& b) {
  if (a.size() != b.size()) throw LengthMismatch("cost vectors have different lengths");
  return a <=> b;
}

inline std::string format_cost(const CostVector& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out + "]";
}

/// Largest candidate size that can still improve on `best`, or nullopt when
/// no bound follows. With the first size-bearing level at index i and every
/// earlier level already 0, a candidate of size s scores at least s on level
/// i, so s > best[i] is always worse; s == best[i] can only tie unless a
/// later level exists to break the tie.
inline std::optional<std::size_t> generator_size_bound(const CostSpec& spec,
                                                       const std::optional<CostVector>& best) {
  if (!best) return std::nullopt;
  if (best->size() != spec.components.size())
    throw LengthMismatch("cost vector does not match the cost spec");
  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    if (!spec.components[i].c_size) {
      if ((*best)[i] != 0) return std::nullopt;
      continue;
    }
    auto v = (*best)[i];
    bool last = i + 1 == spec.components.size();
    if (last) return v <= 0 ? 0 : static_cast<std::size_t>(v - 1);
    return static_cast<std::size_t>(v < 0 ? 0 : v);
  }
  return std::nullopt;
}

}  // namespace lexicost
