#include "martquant/lp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "martquant/errors.hpp"

namespace martquant::lp {

LinearProgram::LinearProgram(std::size_t rows) : rhs_(rows, 0.0) {}

std::size_t LinearProgram::add_variable(double cost,
                                        const std::vector<std::pair<std::size_t, double>>& entries,
                                        double lower, double upper) {
  if (!std::isfinite(lower) || std::isnan(upper) || upper < lower)
    throw InvalidInput("LP variable needs a finite lower bound not above its upper bound");
  for (const auto& [row, value] : entries) {
    if (row >= rows()) throw InvalidInput("LP entry row index out of range");
    if (value == 0.0) continue;
    row_index_.push_back(row);
    values_.push_back(value);
  }
  col_start_.push_back(row_index_.size());
  cost_.push_back(cost);
  lower_.push_back(lower);
  upper_.push_back(upper);
  return cost_.size() - 1;
}

void LinearProgram::set_rhs(std::size_t row, double value) {
  if (row >= rows()) throw InvalidInput("LP rhs row index out of range");
  rhs_[row] = value;
}

LinearProgram LinearProgram::dense(std::size_t rows, std::size_t cols, const std::vector<double>& a,
                                   const std::vector<double>& b, const std::vector<double>& c,
                                   const std::vector<double>& lower,
                                   const std::vector<double>& upper) {
  if (a.size() != rows * cols || b.size() != rows || c.size() != cols || lower.size() != cols ||
      upper.size() != cols)
    throw InvalidInput("dense LP: inconsistent dimensions");
  LinearProgram lp(rows);
  for (std::size_t i = 0; i < rows; ++i) lp.set_rhs(i, b[i]);
  std::vector<std::pair<std::size_t, double>> col;
  for (std::size_t j = 0; j < cols; ++j) {
    col.clear();
    for (std::size_t i = 0; i < rows; ++i) col.emplace_back(i, a[i * cols + j]);
    lp.add_variable(c[j], col, lower[j], upper[j]);
  }
  return lp;
}

void LinearProgram::scale_objective(double factor) {
  for (double& c : cost_) c *= factor;
}

void LinearProgram::validate() const {
  if (col_start_.size() != cost_.size() + 1) throw InvalidInput("LP: corrupt column layout");
  for (std::size_t j = 0; j < cols(); ++j) {
    if (!std::isfinite(cost_[j])) throw InvalidInput("LP: objective entries must be finite");
    if (!std::isfinite(lower_[j])) throw InvalidInput("LP: lower bounds must be finite");
    if (std::isnan(upper_[j]) || upper_[j] < lower_[j])
      throw InvalidInput("LP: each lower bound must not exceed its upper bound");
  }
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidInput("LP: constraint entries must be finite");
  for (double v : rhs_)
    if (!std::isfinite(v)) throw InvalidInput("LP: right-hand side must be finite");
}

const char* to_string(Status s) noexcept {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

enum class Bound : unsigned char { lower, upper, basic };

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SolverOptions& opt)
      : lp_(lp), opt_(opt), m_(lp.rows()), n_(lp.cols()), total_(n_ + m_) {
    lo_.assign(total_, 0.0);
    up_.assign(total_, kInfinity);
    x_.assign(total_, 0.0);
    cost_.assign(total_, 0.0);
    state_.assign(total_, Bound::lower);
    pos_.assign(total_, -1);
    basis_.assign(m_, 0);
    art_sign_.assign(m_, 1.0);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = lp.lower()[j];
      up_[j] = lp.upper()[j];
      x_[j] = lo_[j];
    }
    bland_switch_ = 3 * (m_ + n_);
    max_iter_ = opt.max_iterations ? opt.max_iterations : 50 * (m_ + n_) + 10000;
    refactor_interval_ = std::max<std::size_t>(64, m_);
    inv_norm_.assign(total_, 1.0);
    for (std::size_t j = 0; j < n_; ++j) {
      double s = 0.0;
      for_column(j, [&](std::size_t, double v) { s += v * v; });
      if (s > 0.0) inv_norm_[j] = 1.0 / std::sqrt(s);
    }
  }

  LpSolution run() {
    LpSolution sol;
    // Phase 1: artificial basis on the residual of the all-at-lower-bound point.
    std::vector<double> r = lp_.rhs();
    for (std::size_t j = 0; j < n_; ++j)
      for_column(j, [&](std::size_t i, double v) { r[i] -= v * x_[j]; });
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t a = n_ + i;
      art_sign_[i] = r[i] >= 0.0 ? 1.0 : -1.0;
      x_[a] = std::abs(r[i]);
      basis_[i] = a;
      pos_[a] = static_cast<long>(i);
      state_[a] = Bound::basic;
      cost_[a] = 1.0;
    }
    binv_ = Eigen::MatrixXd::Zero(m_, m_);
    for (std::size_t i = 0; i < m_; ++i) binv_(i, i) = art_sign_[i];
    compute_duals();

    if (iterate(/*phase_one=*/true) != Status::optimal)
      throw NumericalError("phase 1 reported unboundedness", iterations_);
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < m_; ++i) infeasibility += x_[n_ + i];
    if (infeasibility > opt_.feasibility_tol) {
      sol.status = Status::infeasible;
      sol.iterations = iterations_;
      return sol;
    }

    drive_out_artificials();
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t a = n_ + i;
      lo_[a] = up_[a] = 0.0;
      cost_[a] = 0.0;
      if (state_[a] != Bound::basic) x_[a] = 0.0;
    }
    for (std::size_t j = 0; j < n_; ++j) cost_[j] = lp_.cost()[j];
    refactor();
    compute_duals();

    const Status st = iterate(/*phase_one=*/false);
    sol.iterations = iterations_;
    if (st == Status::unbounded) {
      sol.status = Status::unbounded;
      return sol;
    }
    refactor();
    compute_duals();
    finish(sol);
    return sol;
  }

 private:
  template <typename F>
  void for_column(std::size_t j, F&& f) const {
    if (j < n_) {
      for (std::size_t k = lp_.col_start()[j]; k < lp_.col_start()[j + 1]; ++k)
        f(lp_.row_index()[k], lp_.values()[k]);
    } else {
      f(j - n_, art_sign_[j - n_]);
    }
  }

  double dot_duals(std::size_t j) const {
    double s = 0.0;
    for_column(j, [&](std::size_t i, double v) { s += y_[i] * v; });
    return s;
  }

  Eigen::VectorXd ftran(std::size_t j) const {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_);
    for_column(j, [&](std::size_t i, double v) { alpha.noalias() += v * binv_.col(i); });
    return alpha;
  }

  void compute_duals() {
    Eigen::VectorXd cb(m_);
    for (std::size_t i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
    y_ = binv_.transpose() * cb;
  }

  void refactor() {
    if (m_ == 0) return;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m_, m_);
    for (std::size_t r = 0; r < m_; ++r)
      for_column(basis_[r], [&](std::size_t i, double v) { b(i, r) = v; });
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    binv_ = lu.inverse();
    Eigen::VectorXd rhs(m_);
    for (std::size_t i = 0; i < m_; ++i) rhs[i] = lp_.rhs()[i];
    for (std::size_t j = 0; j < total_; ++j) {
      if (state_[j] == Bound::basic || x_[j] == 0.0) continue;
      for_column(j, [&](std::size_t i, double v) { rhs[i] -= v * x_[j]; });
    }
    const Eigen::VectorXd xb = binv_ * rhs;
    for (std::size_t r = 0; r < m_; ++r) x_[basis_[r]] = xb[r];
    since_refactor_ = 0;
  }

  Status iterate(bool phase_one) {
    for (;;) {
      if (iterations_ >= max_iter_)
        throw NumericalError("simplex pivot cap reached after " + std::to_string(iterations_) +
                                 " iterations",
                             iterations_);
      if (since_refactor_ >= refactor_interval_) {
        refactor();
        compute_duals();
      }
      const bool bland = iterations_ >= bland_switch_;

      // Pricing.
      std::size_t q = total_;
      double best = 0.0, dq = 0.0;
      for (std::size_t j = 0; j < total_; ++j) {
        if (state_[j] == Bound::basic || lo_[j] == up_[j]) continue;
        if (!phase_one && j >= n_) continue;
        const double d = cost_[j] - dot_duals(j);
        const bool improving = (state_[j] == Bound::lower && d < -opt_.optimality_tol) ||
                               (state_[j] == Bound::upper && d > opt_.optimality_tol);
        if (!improving) continue;
        if (bland) {
          q = j;
          dq = d;
          break;
        }
        // Phase-1 reduced costs tie massively on transport-like rows; break ties
        // toward cheap columns so the feasible basis found is close to optimal.
        const double score = std::abs(d) * inv_norm_[j];
        const double tie = 1e-12 * std::max(1.0, best);
        const bool wins = score > best + tie ||
                          (phase_one && q < total_ && score >= best - tie && j < n_ &&
                           q < n_ && lp_.cost()[j] < lp_.cost()[q]);
        if (wins) {
          best = std::max(best, score);
          q = j;
          dq = d;
        }
      }
      if (q == total_) return Status::optimal;

      const Eigen::VectorXd alpha = ftran(q);
      const double dir = state_[q] == Bound::lower ? 1.0 : -1.0;

      // Ratio test.
      double theta = up_[q] - lo_[q];
      long leave = -1;
      double leave_pivot = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double ai = alpha[i];
        if (std::abs(ai) <= opt_.pivot_tol) continue;
        const std::size_t b = basis_[i];
        const double a = dir * ai;
        double t;
        if (a > 0.0) {
          t = (x_[b] - lo_[b]) / a;
        } else {
          if (up_[b] == kInfinity) continue;
          t = (up_[b] - x_[b]) / (-a);
        }
        t = std::max(t, 0.0);
        const double tie = 1e-12 * std::max(1.0, std::abs(theta == kInfinity ? t : theta));
        if (leave < 0 ? t < theta : t < theta - tie) {
          theta = t;
          leave = static_cast<long>(i);
          leave_pivot = std::abs(ai);
        } else if (leave >= 0 && std::abs(t - theta) <= tie) {
          const bool better = bland ? basis_[i] < basis_[static_cast<std::size_t>(leave)]
                                    : std::abs(ai) > leave_pivot;
          if (better) {
            theta = std::min(theta, t);
            leave = static_cast<long>(i);
            leave_pivot = std::abs(ai);
          }
        }
      }
      if (leave < 0 && theta == kInfinity) {
        if (phase_one) throw NumericalError("phase 1 direction is unbounded", iterations_);
        return Status::unbounded;
      }

      ++iterations_;
      ++since_refactor_;
      for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= dir * theta * alpha[i];

      if (leave < 0) {
        // The entering variable reaches its opposite bound first.
        state_[q] = state_[q] == Bound::lower ? Bound::upper : Bound::lower;
        x_[q] = state_[q] == Bound::lower ? lo_[q] : up_[q];
        continue;
      }
      x_[q] += dir * theta;

      const std::size_t r = static_cast<std::size_t>(leave);
      const std::size_t out = basis_[r];
      const bool to_lower = dir * alpha[r] > 0.0;
      state_[out] = to_lower ? Bound::lower : Bound::upper;
      x_[out] = to_lower ? lo_[out] : up_[out];
      pos_[out] = -1;
      basis_[r] = q;
      pos_[q] = static_cast<long>(r);
      state_[q] = Bound::basic;

      // Product-form update of the explicit inverse and of the duals.
      const Eigen::RowVectorXd old_row = binv_.row(r);
      const Eigen::RowVectorXd pivot_row = old_row / alpha[r];
      binv_.noalias() -= alpha * pivot_row;
      binv_.row(r) = pivot_row;
      y_ += dq * pivot_row.transpose();
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t b = basis_[r];
      if (b < n_) continue;
      const Eigen::RowVectorXd row = binv_.row(r);
      std::size_t best_j = n_;
      double best = 1e-7;
      for (std::size_t j = 0; j < n_; ++j) {
        if (state_[j] == Bound::basic || lo_[j] == up_[j]) continue;
        double v = 0.0;
        for_column(j, [&](std::size_t i, double a) { v += row[i] * a; });
        if (std::abs(v) > best) {
          best = std::abs(v);
          best_j = j;
        }
      }
      if (best_j == n_) continue;  // redundant row: the artificial stays basic at zero
      const Eigen::VectorXd alpha = ftran(best_j);
      const Eigen::RowVectorXd pivot_row = binv_.row(r) / alpha[r];
      binv_.noalias() -= alpha * pivot_row;
      binv_.row(r) = pivot_row;
      state_[b] = Bound::lower;
      x_[b] = 0.0;
      pos_[b] = -1;
      basis_[r] = best_j;
      pos_[best_j] = static_cast<long>(r);
      state_[best_j] = Bound::basic;
      ++since_refactor_;
    }
  }

  void finish(LpSolution& sol) {
    sol.status = Status::optimal;
    sol.x.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      double v = x_[j];
      if (std::abs(v - lo_[j]) <= opt_.feasibility_tol) v = lo_[j];
      if (up_[j] != kInfinity && std::abs(v - up_[j]) <= opt_.feasibility_tol) v = up_[j];
      sol.x[j] = v;
    }
    sol.duals.assign(y_.data(), y_.data() + m_);
    double obj = 0.0;
    for (std::size_t j = 0; j < n_; ++j) obj += lp_.cost()[j] * sol.x[j];
    sol.objective = obj;

    std::vector<double> ax(m_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      for_column(j, [&](std::size_t i, double v) { ax[i] += v * sol.x[j]; });
    double res = 0.0;
    for (std::size_t i = 0; i < m_; ++i) res = std::max(res, std::abs(ax[i] - lp_.rhs()[i]));
    for (std::size_t j = 0; j < n_; ++j) {
      res = std::max(res, lo_[j] - sol.x[j]);
      if (up_[j] != kInfinity) res = std::max(res, sol.x[j] - up_[j]);
    }
    sol.primal_residual = res;

    // Dual objective bᵀy + Σ_j min over the active bound of d_j x_j.
    double dual_obj = 0.0;
    for (std::size_t i = 0; i < m_; ++i) dual_obj += lp_.rhs()[i] * y_[i];
    double comp = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double d = lp_.cost()[j] - dot_duals(j);
      if (state_[j] == Bound::basic) {
        comp = std::max(comp, std::abs(d) * std::min(sol.x[j] - lo_[j],
                                                       up_[j] == kInfinity ? kInfinity
                                                                           : up_[j] - sol.x[j]));
        dual_obj += d * sol.x[j];
      } else {
        const double bound = state_[j] == Bound::lower ? lo_[j] : up_[j];
        comp = std::max(comp, std::abs(d * (sol.x[j] - bound)));
        dual_obj += d * bound;
      }
    }
    sol.complementarity_residual = comp;
    sol.duality_gap = std::abs(obj - dual_obj);
  }

  const LinearProgram& lp_;
  SolverOptions opt_;
  std::size_t m_, n_, total_;
  std::vector<double> lo_, up_, x_, cost_, art_sign_, inv_norm_;
  std::vector<Bound> state_;
  std::vector<long> pos_;
  std::vector<std::size_t> basis_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd y_;
  std::size_t iterations_ = 0;
  std::size_t since_refactor_ = 0;
  std::size_t bland_switch_ = 0;
  std::size_t max_iter_ = 0;
  std::size_t refactor_interval_ = 64;
};

}  // namespace

LpSolution solve(const LinearProgram& lp, const SolverOptions& options) {
  lp.validate();
  Simplex simplex(lp, options);
  return simplex.run();
}

}  // namespace martquant::lp
