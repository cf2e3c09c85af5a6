#pragma once

// Pairwise-decomposable energy functions over discrete variables:
//
//   E(x) = sum_i e_i(x_i) + sum_i sum_{j != i} e_ij(x_i, x_j) + shift
//
// Pair terms are keyed by ordered pairs (i, j); e_ij and e_ji are
// independent tables. Tables with negative entries are shifted up by
// their minimum at construction and the removed amount is kept in
// `shift`, so every stored table is nonnegative and E is reproduced
// exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coopt/errors.hpp"

namespace coopt {

// Label indices, one per variable.
using Assignment = std::vector<std::size_t>;

struct DiscreteDomain {
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

// Dense table e_ij(x_i, x_j); rows are indexed by x_i.
class PairTable {
 public:
  PairTable() = default;

  PairTable(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw InputError("pair table has " + std::to_string(values_.size()) +
                       " entries, expected " + std::to_string(rows_ * cols_));
    }
  }

  static PairTable from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * cols);
    for (const auto& row : rows) {
      if (row.size() != cols) throw InputError("pair table rows have unequal length");
      values.insert(values.end(), row.begin(), row.end());
    }
    return PairTable(rows.size(), cols, std::move(values));
  }

  double operator()(std::size_t a, std::size_t b) const { return values_[a * cols_ + b]; }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return values_; }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }

  void subtract(double amount) {
    for (double& v : values_) v -= amount;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct PairwiseTerm {
  std::size_t i = 0;
  std::size_t j = 0;
  PairTable table;
};

class EnergyModel;

EnergyModel build_model(std::vector<DiscreteDomain> domains,
                        std::vector<std::vector<double>> unary,
                        std::vector<PairwiseTerm> pairwise);

// Immutable after construction; obtain instances through build_model.
class EnergyModel {
 public:
  std::size_t size() const noexcept { return domains_.size(); }

  const DiscreteDomain& domain(std::size_t i) const { return domains_.at(i); }
  std::size_t domain_size(std::size_t i) const { return domains_.at(i).size(); }

  std::span<const double> unary(std::size_t i) const { return unary_.at(i); }

  // All pair terms, sorted by (i, j).
  std::span<const PairwiseTerm> terms() const noexcept { return terms_; }

  // Indices into terms() of the pairs owned by variable i (first index i).
  std::span<const std::size_t> owned_terms(std::size_t i) const { return owned_.at(i); }

  // Pointer to e_ij, or nullptr when the pair is absent.
  const PairTable* pair(std::size_t i, std::size_t j) const {
    for (std::size_t k : owned_.at(i)) {
      if (terms_[k].j == j) return &terms_[k].table;
    }
    return nullptr;
  }

  double shift() const noexcept { return shift_; }

  // Product of domain sizes, saturating at SIZE_MAX.
  std::size_t assignment_count() const noexcept {
    std::size_t count = 1;
    for (const auto& d : domains_) {
      if (count > static_cast<std::size_t>(-1) / d.size()) return static_cast<std::size_t>(-1);
      count *= d.size();
    }
    return count;
  }

 private:
  friend EnergyModel build_model(std::vector<DiscreteDomain>, std::vector<std::vector<double>>,
                                 std::vector<PairwiseTerm>);

  std::vector<DiscreteDomain> domains_;
  std::vector<std::vector<double>> unary_;
  std::vector<PairwiseTerm> terms_;
  std::vector<std::vector<std::size_t>> owned_;
  double shift_ = 0.0;
};

inline EnergyModel build_model(std::vector<DiscreteDomain> domains,
                               std::vector<std::vector<double>> unary,
                               std::vector<PairwiseTerm> pairwise) {
  const std::size_t n = domains.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& labels = domains[i].labels;
    if (labels.empty()) throw InputError("variable " + std::to_string(i) + " has an empty domain");
    std::set<std::string> seen(labels.begin(), labels.end());
    if (seen.size() != labels.size()) {
      throw InputError("variable " + std::to_string(i) + " has duplicate labels");
    }
  }
  if (unary.size() != n) {
    throw InputError("expected " + std::to_string(n) + " unary tables, got " +
                     std::to_string(unary.size()));
  }

  EnergyModel model;
  for (std::size_t i = 0; i < n; ++i) {
    if (unary[i].size() != domains[i].size()) {
      throw InputError("unary[" + std::to_string(i) + "] has " + std::to_string(unary[i].size()) +
                       " entries, domain has " + std::to_string(domains[i].size()));
    }
    for (std::size_t a = 0; a < unary[i].size(); ++a) {
      if (!std::isfinite(unary[i][a])) {
        throw InputError("unary[" + std::to_string(i) + "][" + std::to_string(a) + "] is not finite");
      }
    }
    const double lowest = *std::min_element(unary[i].begin(), unary[i].end());
    if (lowest < 0.0) {
      for (double& v : unary[i]) v -= lowest;
      model.shift_ += lowest;
    }
  }

  std::set<std::pair<std::size_t, std::size_t>> keys;
  for (auto& term : pairwise) {
    const std::string where = "pairwise (" + std::to_string(term.i) + "," + std::to_string(term.j) + ")";
    if (term.i >= n || term.j >= n) throw InputError(where + ": variable index out of range");
    if (term.i == term.j) throw InputError(where + ": pair key with i == j");
    if (!keys.emplace(term.i, term.j).second) throw InputError(where + ": duplicate pair");
    if (term.table.rows() != domains[term.i].size() || term.table.cols() != domains[term.j].size()) {
      throw InputError(where + ": table is " + std::to_string(term.table.rows()) + "x" +
                       std::to_string(term.table.cols()) + ", expected " +
                       std::to_string(domains[term.i].size()) + "x" +
                       std::to_string(domains[term.j].size()));
    }
    for (double v : term.table.values()) {
      if (!std::isfinite(v)) throw InputError(where + ": non-finite entry");
    }
    const double lowest = term.table.min();
    if (lowest < 0.0) {
      term.table.subtract(lowest);
      model.shift_ += lowest;
    }
  }
  std::sort(pairwise.begin(), pairwise.end(),
            [](const PairwiseTerm& a, const PairwiseTerm& b) {
              return std::pair(a.i, a.j) < std::pair(b.i, b.j);
            });

  model.owned_.resize(n);
  for (std::size_t k = 0; k < pairwise.size(); ++k) model.owned_[pairwise[k].i].push_back(k);
  model.domains_ = std::move(domains);
  model.unary_ = std::move(unary);
  model.terms_ = std::move(pairwise);
  return model;
}

// E(x), including the shift.
inline double evaluate(const EnergyModel& model, std::span<const std::size_t> x) {
  if (x.size() != model.size()) {
    throw InputError("assignment has " + std::to_string(x.size()) + " entries, model has " +
                     std::to_string(model.size()) + " variables");
  }
  double total = model.shift();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= model.domain_size(i)) {
      throw InputError("label index " + std::to_string(x[i]) + " out of domain for variable " +
                       std::to_string(i));
    }
    total += model.unary(i)[x[i]];
  }
  for (const auto& term : model.terms()) total += term.table(x[term.i], x[term.j]);
  return total;
}

// E_i(x) = e_i(x_i) + sum_{j != i} e_ij(x_i, x_j) for one owner i. Holds its
// own copies of the tables it needs.
class SubEnergy {
 public:
  SubEnergy(const EnergyModel& model, std::size_t owner) : owner_(owner) {
    const auto u = model.unary(owner);
    unary_.assign(u.begin(), u.end());
    std::set<std::size_t> hood{owner};
    for (std::size_t k : model.owned_terms(owner)) {
      terms_.push_back(model.terms()[k]);
      hood.insert(model.terms()[k].j);
    }
    neighborhood_.assign(hood.begin(), hood.end());
    for (std::size_t j : neighborhood_) sizes_.push_back(model.domain_size(j));
  }

  std::size_t owner() const noexcept { return owner_; }

  // X_i: the owner and every variable paired with it, ascending.
  std::span<const std::size_t> neighborhood() const noexcept { return neighborhood_; }

  // Domain sizes parallel to neighborhood().
  std::span<const std::size_t> neighborhood_sizes() const noexcept { return sizes_; }

  // Reads only the neighborhood entries of a full-length assignment.
  double operator()(std::span<const std::size_t> x) const {
    double total = unary_[x[owner_]];
    for (const auto& term : terms_) total += term.table(x[owner_], x[term.j]);
    return total;
  }

 private:
  std::size_t owner_;
  std::vector<double> unary_;
  std::vector<PairwiseTerm> terms_;
  std::vector<std::size_t> neighborhood_;
  std::vector<std::size_t> sizes_;
};

inline std::vector<SubEnergy> decompose(const EnergyModel& model) {
  std::vector<SubEnergy> parts;
  parts.reserve(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) parts.emplace_back(model, i);
  return parts;
}

}  // namespace coopt
