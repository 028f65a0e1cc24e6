#include "nsr/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace nsr {

Box::Box(Vec lower, Vec upper) : lb(std::move(lower)), ub(std::move(upper)) {
  if (lb.size() != ub.size()) {
    throw Error("box: lower bound has " + std::to_string(lb.size()) +
                " entries but upper bound has " + std::to_string(ub.size()));
  }
  for (std::size_t d = 0; d < lb.size(); ++d) {
    if (!(lb[d] <= ub[d])) {
      throw Error("box: dimension " + std::to_string(d) + " has lb " + fmt_double(lb[d]) +
                  " > ub " + fmt_double(ub[d]));
    }
  }
}

Box Box::uniform(std::size_t dim, double lo, double hi) {
  return Box(Vec(dim, lo), Vec(dim, hi));
}

bool Box::contains(ConstSpan p, double tol) const {
  if (p.size() != dim()) return false;
  for (std::size_t d = 0; d < dim(); ++d) {
    if (p[d] < lb[d] - tol || p[d] > ub[d] + tol) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  if (other.dim() != dim()) return false;
  for (std::size_t d = 0; d < dim(); ++d) {
    if (other.lb[d] < lb[d] || other.ub[d] > ub[d]) return false;
  }
  return true;
}

Box Box::product(const Box& other) const {
  Vec l = lb, u = ub;
  l.insert(l.end(), other.lb.begin(), other.lb.end());
  u.insert(u.end(), other.ub.begin(), other.ub.end());
  return Box(std::move(l), std::move(u));
}

Vec Box::clamp(ConstSpan p) const {
  Vec out(p.begin(), p.end());
  clamp_in_place(out);
  return out;
}

void Box::clamp_in_place(MutSpan p) const {
  for (std::size_t d = 0; d < p.size() && d < dim(); ++d) p[d] = std::clamp(p[d], lb[d], ub[d]);
}

Vec Box::midpoint() const {
  Vec m(dim());
  for (std::size_t d = 0; d < dim(); ++d) m[d] = 0.5 * (lb[d] + ub[d]);
  return m;
}

double inf_dist(ConstSpan a, ConstSpan b) {
  double m = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double inf_norm(ConstSpan a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Vec concat(std::initializer_list<ConstSpan> parts) {
  std::size_t total = 0;
  for (auto p : parts) total += p.size();
  Vec out;
  out.reserve(total);
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_vec(ConstSpan v) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << fmt_double(v[i]);
  }
  os << ')';
  return os.str();
}

}  // namespace nsr
