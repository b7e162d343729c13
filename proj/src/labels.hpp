#pragma once

// Shared between the symbolic generators and their numeric twins so that both
// emit identical labels in identical order.

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace pepforge {

namespace labels {

inline std::string ordered(const std::string& kind, const std::string& i, const std::string& j) {
  return kind + "(" + i + "," + j + ")";
}

inline std::string unordered(const std::string& kind, const std::string& i, const std::string& j) {
  return kind + "{" + i + "," + j + "}";
}

inline std::string single(const std::string& kind, const std::string& i) { return kind + "(" + i + ")"; }

inline std::string indexed(const std::string& kind, std::size_t i, std::size_t j) {
  return kind + "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

inline std::string tagged(const std::string& kind, std::size_t step, const std::string& tag) {
  return kind + "[" + std::to_string(step) + "](" + tag + ")";
}

inline std::string cycle(const std::string& kind, const std::vector<std::string>& names) {
  std::string s = kind + "(";
  for (std::size_t t = 0; t < names.size(); ++t) s += (t ? ">" : "") + names[t];
  return s + ")";
}

}  // namespace labels

enum class SmoothStronglyConvexForm { general, no_upper_curvature, no_lower_curvature, equal_curvature };

inline SmoothStronglyConvexForm smooth_strongly_convex_form(double mu, double L) {
  if (L == std::numeric_limits<double>::infinity()) return SmoothStronglyConvexForm::no_upper_curvature;
  if (mu == -std::numeric_limits<double>::infinity()) return SmoothStronglyConvexForm::no_lower_curvature;
  if (mu == L) return SmoothStronglyConvexForm::equal_curvature;
  return SmoothStronglyConvexForm::general;
}

namespace detail {

/// Visits each directed simple cycle of length 2..max_len once, rotated so the
/// smallest index leads.
void for_each_cycle(int n, int max_len, const std::function<void(const std::vector<int>&)>& visit);

int effective_cycle_length(int n, int requested, bool allow_large);

}  // namespace detail

}  // namespace pepforge
