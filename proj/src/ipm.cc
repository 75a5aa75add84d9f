#include "gcnet/ipm.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

#include <Eigen/SparseCholesky>

namespace gcnet {
namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Filter line-search constants.
constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi = 1e-8;
constexpr double kGammaAlpha = 0.05;
constexpr double kDelta = 1.0;
constexpr double kSTheta = 1.1;
constexpr double kSPhi = 2.3;
constexpr double kEta = 1e-4;
// Barrier update.
constexpr double kKappaEps = 10.0;
constexpr double kKappaMu = 0.2;
constexpr double kThetaMu = 1.5;
constexpr double kKappaSigma = 1e10;
constexpr double kSMax = 100.0;

// Assembles and factorizes the symmetric indefinite KKT matrix
//   [ H + diag(sigma) + dw I    J^T   ]
//   [ J                        -dc I  ]
// and reports whether its inertia is (n, m, 0).
class KktSystem {
 public:
  KktSystem(int n, int m) : n_(n), m_(m) {}

  bool Factor(const std::vector<Triplet>& hess, const std::vector<Triplet>& jac,
              const VectorXd& sigma, double dw, double dc) {
    triplets_.clear();
    triplets_.reserve(hess.size() + jac.size() + n_ + m_);
    triplets_.insert(triplets_.end(), hess.begin(), hess.end());
    for (const auto& t : jac) triplets_.emplace_back(n_ + t.row(), t.col(), t.value());
    for (int i = 0; i < n_; ++i) triplets_.emplace_back(i, i, sigma[i] + dw);
    for (int r = 0; r < m_; ++r) triplets_.emplace_back(n_ + r, n_ + r, -dc);
    mat_.resize(n_ + m_, n_ + m_);
    mat_.setFromTriplets(triplets_.begin(), triplets_.end());
    dc_ = dc;
    if (!analyzed_) {
      ldlt_.analyzePattern(mat_);
      analyzed_ = true;
    }
    ldlt_.factorize(mat_);
    if (ldlt_.info() != Eigen::Success) return false;
    const VectorXd& d = ldlt_.vectorD();
    int pos = 0, neg = 0;
    for (int i = 0; i < d.size(); ++i) {
      if (!std::isfinite(d[i])) return false;
      if (d[i] > 0.0) ++pos;
      else if (d[i] < 0.0) ++neg;
    }
    return pos == n_ && neg == m_;
  }

  // Solves against the factorization, refining against the matrix with the
  // constraint regularization removed.
  VectorXd Solve(const VectorXd& rhs) const {
    VectorXd x = ldlt_.solve(rhs);
    for (int it = 0; it < 3; ++it) {
      VectorXd r = rhs - Multiply(x);
      if (r.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
        break;
      x += ldlt_.solve(r);
    }
    return x;
  }

 private:
  VectorXd Multiply(const VectorXd& x) const {
    VectorXd y = mat_.selfadjointView<Eigen::Lower>() * x;
    y.tail(m_) += dc_ * x.tail(m_);
    return y;
  }

  int n_;
  int m_;
  double dc_ = 0.0;
  bool analyzed_ = false;
  std::vector<Triplet> triplets_;
  SpMat mat_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

struct Bounds {
  VectorXd lo, hi;
  std::vector<char> has_lo, has_hi;
};

// Largest alpha in (0, 1] keeping v + alpha*dv strictly inside by fraction tau.
double FractionToBoundary(const VectorXd& slack, const VectorXd& dslack,
                          const std::vector<char>& mask, double tau) {
  double alpha = 1.0;
  for (int i = 0; i < slack.size(); ++i) {
    if (!mask[i]) continue;
    if (dslack[i] < 0.0) alpha = std::min(alpha, -tau * slack[i] / dslack[i]);
  }
  return alpha;
}

// l1 feasibility problem used by the restoration phase:
//   min rho * sum(p + n) + zeta/2 * ||D (w - w_ref)||^2
//   s.t. c(w) - p + n = 0,  lo <= w <= hi,  p, n >= 0.
class RestorationNlp : public SparseNlp {
 public:
  RestorationNlp(const SparseNlp& inner, const VectorXd& w_ref, double zeta)
      : inner_(inner), n_(inner.num_vars()), m_(inner.num_cons()), w_ref_(w_ref),
        zeta_(zeta) {
    scale_sq_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      const double d = std::min(1.0, 1.0 / std::max(1e-12, std::abs(w_ref[i])));
      scale_sq_[i] = d * d;
    }
  }

  static constexpr double kRho = 1000.0;

  int num_vars() const override { return n_ + 2 * m_; }
  int num_cons() const override { return m_; }
  void Bounds(VectorXd* lo, VectorXd* hi) const override {
    VectorXd ilo, ihi;
    inner_.Bounds(&ilo, &ihi);
    lo->resize(num_vars());
    hi->resize(num_vars());
    lo->head(n_) = ilo;
    hi->head(n_) = ihi;
    lo->tail(2 * m_).setZero();
    hi->tail(2 * m_).setConstant(kInf);
  }
  double Objective(const VectorXd& x) const override {
    const VectorXd dw = x.head(n_) - w_ref_;
    return kRho * x.tail(2 * m_).sum() +
           0.5 * zeta_ * (scale_sq_.array() * dw.array().square()).sum();
  }
  void Gradient(const VectorXd& x, VectorXd* g) const override {
    g->resize(num_vars());
    g->head(n_) = zeta_ * (scale_sq_.array() * (x.head(n_) - w_ref_).array()).matrix();
    g->tail(2 * m_).setConstant(kRho);
  }
  void Constraints(const VectorXd& x, VectorXd* c) const override {
    inner_.Constraints(x.head(n_), c);
    *c += -x.segment(n_, m_) + x.tail(m_);
  }
  void Jacobian(const VectorXd& x, std::vector<Triplet>* out) const override {
    inner_.Jacobian(x.head(n_), out);
    for (int r = 0; r < m_; ++r) {
      out->emplace_back(r, n_ + r, -1.0);
      out->emplace_back(r, n_ + m_ + r, 1.0);
    }
  }
  void Hessian(const VectorXd& x, double obj_factor, const VectorXd& lambda,
               std::vector<Triplet>* out) const override {
    inner_.Hessian(x.head(n_), 0.0, lambda, out);
    for (int i = 0; i < n_; ++i) out->emplace_back(i, i, obj_factor * zeta_ * scale_sq_[i]);
  }

  // Starting slacks solving the restoration complementarity for given c.
  VectorXd StartingPoint(const VectorXd& w, const VectorXd& c, double mu) const {
    VectorXd x(num_vars());
    x.head(n_) = w;
    for (int r = 0; r < m_; ++r) {
      const double a = (mu - kRho * c[r]) / (2.0 * kRho);
      const double nn = a + std::sqrt(a * a + mu * c[r] / (2.0 * kRho));
      x[n_ + m_ + r] = nn;
      x[n_ + r] = c[r] + nn;
    }
    return x;
  }

 private:
  const SparseNlp& inner_;
  int n_, m_;
  VectorXd w_ref_;
  VectorXd scale_sq_;
  double zeta_;
};

class Solver {
 public:
  Solver(const SparseNlp& nlp, const IpmOptions& opts)
      : nlp_(nlp), opts_(opts), n_(nlp.num_vars()), m_(nlp.num_cons()),
        kkt_(n_, m_), kkt_aux_(n_, m_) {
    nlp_.Bounds(&b_.lo, &b_.hi);
    b_.has_lo.resize(n_);
    b_.has_hi.resize(n_);
    for (int i = 0; i < n_; ++i) {
      b_.has_lo[i] = std::isfinite(b_.lo[i]);
      b_.has_hi[i] = std::isfinite(b_.hi[i]);
    }
  }

  IpmResult Run(const VectorXd& w0) {
    IpmResult res;
    w_ = PushInterior(w0);
    zl_ = VectorXd::Zero(n_);
    zu_ = VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      if (b_.has_lo[i]) zl_[i] = 1.0;
      if (b_.has_hi[i]) zu_[i] = 1.0;
    }
    lam_ = VectorXd::Zero(m_);
    mu_ = opts_.mu_init;
    const double mu_min = std::min(opts_.tol_compl, opts_.tol_constr) / 10.0;

    Evaluate();
    if (!AllFinite()) return Fail(res, IpmStatus::kNumericalError, "non-finite initial point");
    InitMultipliers();
    const double theta0 = c_.lpNorm<1>();
    theta_max_ = 1e4 * std::max(1.0, theta0);
    theta_min_ = 1e-4 * std::max(1.0, theta0);
    filter_.clear();

    for (int iter = 0; iter <= opts_.max_iter; ++iter) {
      res.iterations = iter;
      Errors(0.0, &dual_, &constr_, &compl_);
      if (opts_.verbose) {
        std::fprintf(stderr, "%4d f=%+.8e |c|=%.2e dual=%.2e compl=%.2e mu=%.1e dw=%.1e\n",
                     iter, f_, constr_, dual_, compl_, mu_, dw_last_);
      }
      if (dual_ <= opts_.tol_dual && constr_ <= opts_.tol_constr &&
          compl_ <= opts_.tol_compl) {
        return Finish(res, IpmStatus::kConverged, "converged");
      }
      if (opts_.stop_early && opts_.stop_early(w_)) {
        return Finish(res, IpmStatus::kStoppedEarly, "stopped by callback");
      }
      if (iter == opts_.max_iter) break;

      // Monotone barrier update.
      for (;;) {
        double d, c, k;
        Errors(mu_, &d, &c, &k);
        if (std::max({d, c, k}) > kKappaEps * mu_ || mu_ <= mu_min) break;
        mu_ = std::max(mu_min, std::min(kKappaMu * mu_, std::pow(mu_, kThetaMu)));
        filter_.clear();
      }

      if (!ComputeStep()) {
        return Fail(res, IpmStatus::kNumericalError, "KKT factorization failed");
      }
      if (!LineSearch()) {
        if (!opts_.allow_restoration) {
          return Fail(res, IpmStatus::kLineSearchFailed, "line search failed");
        }
        const IpmStatus rs = Restore();
        if (rs != IpmStatus::kStoppedEarly) {
          return Fail(res, rs == IpmStatus::kInfeasible ? rs : IpmStatus::kLineSearchFailed,
                      "restoration phase failed");
        }
      }
    }
    return Finish(res, IpmStatus::kMaxIterations, "iteration limit reached");
  }

 private:
  VectorXd PushInterior(const VectorXd& w0) const {
    VectorXd w = w0;
    for (int i = 0; i < n_; ++i) {
      const double lo = b_.lo[i], hi = b_.hi[i];
      if (b_.has_lo[i] && b_.has_hi[i]) {
        const double pad_lo = std::min(1e-2 * std::max(1.0, std::abs(lo)), 1e-2 * (hi - lo));
        const double pad_hi = std::min(1e-2 * std::max(1.0, std::abs(hi)), 1e-2 * (hi - lo));
        w[i] = std::clamp(w[i], lo + pad_lo, hi - pad_hi);
      } else if (b_.has_lo[i]) {
        w[i] = std::max(w[i], lo + 1e-2 * std::max(1.0, std::abs(lo)));
      } else if (b_.has_hi[i]) {
        w[i] = std::min(w[i], hi - 1e-2 * std::max(1.0, std::abs(hi)));
      }
    }
    return w;
  }

  void Evaluate() {
    f_ = nlp_.Objective(w_);
    nlp_.Gradient(w_, &g_);
    nlp_.Constraints(w_, &c_);
    jac_trip_.clear();
    nlp_.Jacobian(w_, &jac_trip_);
    jac_.resize(m_, n_);
    jac_.setFromTriplets(jac_trip_.begin(), jac_trip_.end());
  }

  bool AllFinite() const {
    return std::isfinite(f_) && g_.allFinite() && c_.allFinite();
  }

  void Slacks(const VectorXd& w, VectorXd* sl, VectorXd* su) const {
    sl->resize(n_);
    su->resize(n_);
    for (int i = 0; i < n_; ++i) {
      (*sl)[i] = b_.has_lo[i] ? w[i] - b_.lo[i] : 1.0;
      (*su)[i] = b_.has_hi[i] ? b_.hi[i] - w[i] : 1.0;
    }
  }

  double Barrier(const VectorXd& w, double f) const {
    double phi = f;
    for (int i = 0; i < n_; ++i) {
      if (b_.has_lo[i]) {
        const double s = w[i] - b_.lo[i];
        if (s <= 0.0) return kInf;
        phi -= mu_ * std::log(s);
      }
      if (b_.has_hi[i]) {
        const double s = b_.hi[i] - w[i];
        if (s <= 0.0) return kInf;
        phi -= mu_ * std::log(s);
      }
    }
    return phi;
  }

  // Least-squares multiplier estimate; discarded when implausibly large.
  void InitMultipliers() {
    if (m_ == 0) return;
    std::vector<Triplet> none;
    VectorXd ones = VectorXd::Zero(n_);
    if (!kkt_aux_.Factor(none, jac_trip_, ones, 1.0, 1e-8)) return;
    VectorXd rhs(n_ + m_);
    rhs.head(n_) = -(g_ - zl_ + zu_);
    rhs.tail(m_).setZero();
    VectorXd sol = kkt_aux_.Solve(rhs);
    VectorXd lam = sol.tail(m_);
    if (lam.allFinite() && lam.lpNorm<Eigen::Infinity>() <= 1e3) lam_ = lam;
  }

  void Errors(double mu, double* dual, double* constr, double* compl_err) const {
    VectorXd rd = g_ - zl_ + zu_;
    if (m_ > 0) rd += jac_.transpose() * lam_;
    const double zsum = zl_.lpNorm<1>() + zu_.lpNorm<1>();
    const double sd = std::max(kSMax, (lam_.lpNorm<1>() + zsum) / (n_ + m_)) / kSMax;
    const double sc = std::max(kSMax, zsum / std::max(1, n_)) / kSMax;
    *dual = rd.lpNorm<Eigen::Infinity>() / sd;
    *constr = m_ > 0 ? c_.lpNorm<Eigen::Infinity>() : 0.0;
    VectorXd sl, su;
    Slacks(w_, &sl, &su);
    double k = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (b_.has_lo[i]) k = std::max(k, std::abs(sl[i] * zl_[i] - mu));
      if (b_.has_hi[i]) k = std::max(k, std::abs(su[i] * zu_[i] - mu));
    }
    *compl_err = k / sc;
  }

  bool FactorWithInertiaCorrection(const VectorXd& sigma) {
    const double dc = 1e-9;
    double dw = 0.0;
    if (kkt_.Factor(hess_trip_, jac_trip_, sigma, dw, dc)) {
      dw_cur_ = 0.0;
      return true;
    }
    dw = dw_last_ == 0.0 ? 1e-4 : std::max(1e-20, dw_last_ / 3.0);
    while (dw <= 1e40) {
      if (kkt_.Factor(hess_trip_, jac_trip_, sigma, dw, dc)) {
        dw_last_ = dw_cur_ = dw;
        return true;
      }
      dw *= (dw_last_ == 0.0) ? 100.0 : 8.0;
    }
    return false;
  }

  bool ComputeStep() {
    hess_trip_.clear();
    nlp_.Hessian(w_, 1.0, lam_, &hess_trip_);
    VectorXd sl, su;
    Slacks(w_, &sl, &su);
    sigma_.resize(n_);
    grad_phi_ = g_;
    for (int i = 0; i < n_; ++i) {
      sigma_[i] = 0.0;
      if (b_.has_lo[i]) {
        sigma_[i] += zl_[i] / sl[i];
        grad_phi_[i] -= mu_ / sl[i];
      }
      if (b_.has_hi[i]) {
        sigma_[i] += zu_[i] / su[i];
        grad_phi_[i] += mu_ / su[i];
      }
    }
    if (!FactorWithInertiaCorrection(sigma_)) return false;
    VectorXd rhs(n_ + m_);
    rhs.head(n_) = -grad_phi_;
    if (m_ > 0) rhs.head(n_) -= jac_.transpose() * lam_;
    rhs.tail(m_) = -c_;
    VectorXd sol = kkt_.Solve(rhs);
    if (!sol.allFinite()) return false;
    dx_ = sol.head(n_);
    dlam_ = sol.tail(m_);
    dzl_ = VectorXd::Zero(n_);
    dzu_ = VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      if (b_.has_lo[i]) dzl_[i] = mu_ / sl[i] - zl_[i] - zl_[i] / sl[i] * dx_[i];
      if (b_.has_hi[i]) dzu_[i] = mu_ / su[i] - zu_[i] + zu_[i] / su[i] * dx_[i];
    }
    return true;
  }

  double Tau() const { return std::max(0.99, 1.0 - mu_); }

  double MaxPrimalStep(const VectorXd& dx) const {
    VectorXd sl, su;
    Slacks(w_, &sl, &su);
    return std::min(FractionToBoundary(sl, dx, b_.has_lo, Tau()),
                    FractionToBoundary(su, -dx, b_.has_hi, Tau()));
  }

  bool InFilter(double theta, double phi) const {
    for (const auto& [ft, fp] : filter_) {
      if (theta >= ft && phi >= fp) return true;
    }
    return false;
  }

  struct Trial {
    VectorXd w;
    double f = 0.0;
    VectorXd c;
    double theta = 0.0;
    double phi = 0.0;
  };

  bool EvalTrial(const VectorXd& w, Trial* t) const {
    t->w = w;
    t->f = nlp_.Objective(w);
    nlp_.Constraints(w, &t->c);
    t->theta = t->c.lpNorm<1>();
    t->phi = Barrier(w, t->f);
    return std::isfinite(t->f) && t->c.allFinite() && std::isfinite(t->phi);
  }

  // Returns acceptance; sets *ftype when the step was accepted by the
  // Armijo (objective-decrease) rule.
  bool Acceptable(const Trial& t, double alpha, double theta0, double phi0,
                  double gphi_d, bool* ftype) const {
    *ftype = false;
    if (t.theta > theta_max_) return false;
    if (InFilter(t.theta, t.phi)) return false;
    const bool switching = gphi_d < 0.0 &&
        alpha * std::pow(-gphi_d, kSPhi) > kDelta * std::pow(theta0, kSTheta);
    if (switching && theta0 <= theta_min_) {
      *ftype = true;
      return t.phi <= phi0 + kEta * alpha * gphi_d;
    }
    return t.theta <= (1.0 - kGammaTheta) * theta0 ||
           t.phi <= phi0 - kGammaPhi * theta0;
  }

  void Accept(const Trial& t, double alpha_primal, const VectorXd& dlam,
              double alpha_dual, bool ftype, double theta0, double phi0) {
    if (!ftype) filter_.emplace_back((1.0 - kGammaTheta) * theta0, phi0 - kGammaPhi * theta0);
    w_ = t.w;
    lam_ += alpha_primal * dlam;
    zl_ += alpha_dual * dzl_;
    zu_ += alpha_dual * dzu_;
    Evaluate();
    VectorXd sl, su;
    Slacks(w_, &sl, &su);
    for (int i = 0; i < n_; ++i) {
      if (b_.has_lo[i])
        zl_[i] = std::clamp(zl_[i], mu_ / (kKappaSigma * sl[i]), kKappaSigma * mu_ / sl[i]);
      if (b_.has_hi[i])
        zu_[i] = std::clamp(zu_[i], mu_ / (kKappaSigma * su[i]), kKappaSigma * mu_ / su[i]);
    }
  }

  bool LineSearch() {
    const double theta0 = c_.lpNorm<1>();
    const double phi0 = Barrier(w_, f_);
    const double gphi_d = grad_phi_.dot(dx_);
    const double alpha_max = MaxPrimalStep(dx_);
    VectorXd sl, su;
    Slacks(w_, &sl, &su);
    const double alpha_z = std::min(FractionToBoundary(zl_, dzl_, b_.has_lo, Tau()),
                                    FractionToBoundary(zu_, dzu_, b_.has_hi, Tau()));
    double alpha_min = kGammaTheta;
    if (gphi_d < 0.0) {
      alpha_min = std::min(kGammaTheta, kGammaPhi * theta0 / (-gphi_d));
      if (theta0 <= theta_min_) {
        alpha_min = std::min(alpha_min, kDelta * std::pow(theta0, kSTheta) /
                                            std::pow(-gphi_d, kSPhi));
      }
    }
    alpha_min *= kGammaAlpha;

    Trial t;
    bool ftype = false;
    double alpha = alpha_max;
    for (int k = 0; alpha >= alpha_min && k < 60; ++k, alpha *= 0.5) {
      const bool ok = EvalTrial(w_ + alpha * dx_, &t);
      if (opts_.verbose)
        std::fprintf(stderr, "     try a=%.3e theta=%.4e->%.4e phi=%.6e->%.6e gphid=%.3e\n", alpha, theta0,
                     t.theta, phi0, t.phi, gphi_d);
      if (ok && Acceptable(t, alpha, theta0, phi0, gphi_d, &ftype)) {
        Accept(t, alpha, dlam_, alpha_z, ftype, theta0, phi0);
        return true;
      }
      // Second-order correction on the first (full) trial only.
      if (k == 0 && ok && t.theta >= theta0 && m_ > 0) {
        VectorXd rhs(n_ + m_);
        rhs.head(n_) = -grad_phi_ - jac_.transpose() * lam_;
        rhs.tail(m_) = -(alpha * c_ + t.c);
        VectorXd sol = kkt_.Solve(rhs);
        VectorXd dx_soc = sol.head(n_);
        const double a_soc = MaxPrimalStep(dx_soc);
        Trial ts;
        if (sol.allFinite() && EvalTrial(w_ + a_soc * dx_soc, &ts) &&
            Acceptable(ts, alpha, theta0, phi0, gphi_d, &ftype)) {
          VectorXd dlam = sol.tail(m_);
          Accept(ts, a_soc, dlam, alpha_z, ftype, theta0, phi0);
          return true;
        }
      }
    }
    return false;
  }

  // Restoration phase: reduce infeasibility until the filter accepts.
  IpmStatus Restore() {
    const double theta_start = c_.lpNorm<1>();
    const double phi_start = Barrier(w_, f_);
    filter_.emplace_back((1.0 - kGammaTheta) * theta_start, phi_start - kGammaPhi * theta_start);
    RestorationNlp resto(nlp_, w_, std::sqrt(mu_));
    IpmOptions ro = opts_;
    ro.allow_restoration = false;
    ro.verbose = false;
    ro.mu_init = std::max(mu_, c_.lpNorm<Eigen::Infinity>());
    ro.max_iter = 300;
    VectorXd cw;
    ro.stop_early = [&](const VectorXd& x) {
      const VectorXd w = x.head(n_);
      nlp_.Constraints(w, &cw);
      const double theta = cw.lpNorm<1>();
      if (theta > 0.9 * theta_start) return false;
      const double phi = Barrier(w, nlp_.Objective(w));
      return std::isfinite(phi) && !InFilter(theta, phi);
    };
    const VectorXd x0 = resto.StartingPoint(w_, c_, ro.mu_init);
    IpmResult r = SolveIpm(resto, x0, ro);
    if (opts_.verbose) {
      std::fprintf(stderr, "     restoration: %s after %d iterations\n", ToString(r.status).c_str(),
                   r.iterations);
    }
    if (r.w.size() != resto.num_vars()) return IpmStatus::kNumericalError;
    if (r.status == IpmStatus::kConverged) {
      nlp_.Constraints(r.w.head(n_), &cw);
      if (cw.lpNorm<Eigen::Infinity>() > opts_.tol_constr) return IpmStatus::kInfeasible;
    } else if (r.status != IpmStatus::kStoppedEarly) {
      return r.status;
    }
    w_ = r.w.head(n_);
    zl_ = r.z_lo.head(n_);
    zu_ = r.z_hi.head(n_);
    for (int i = 0; i < n_; ++i) {
      if (!b_.has_lo[i]) zl_[i] = 0.0;
      if (!b_.has_hi[i]) zu_[i] = 0.0;
    }
    Evaluate();
    lam_.setZero();
    InitMultipliers();
    return IpmStatus::kStoppedEarly;
  }

  IpmResult& Finish(IpmResult& res, IpmStatus status, const char* msg) {
    res.status = status;
    res.message = msg;
    res.w = w_;
    res.lambda = lam_;
    res.z_lo = zl_;
    res.z_hi = zu_;
    res.objective = f_;
    Errors(0.0, &res.dual_inf, &res.constr_viol, &res.compl_err);
    return res;
  }

  IpmResult& Fail(IpmResult& res, IpmStatus status, const char* msg) {
    if (w_.size() == n_ && g_.size() == n_) return Finish(res, status, msg);
    res.status = status;
    res.message = msg;
    return res;
  }

  const SparseNlp& nlp_;
  IpmOptions opts_;
  int n_, m_;
  Bounds b_;
  KktSystem kkt_;
  KktSystem kkt_aux_;  // Hessian-free system for multiplier estimates

  VectorXd w_, lam_, zl_, zu_;
  double f_ = 0.0;
  VectorXd g_, c_;
  std::vector<Triplet> jac_trip_, hess_trip_;
  SpMat jac_;
  double mu_ = 0.1;
  double dual_ = 0.0, constr_ = 0.0, compl_ = 0.0;

  VectorXd sigma_, grad_phi_, dx_, dlam_, dzl_, dzu_;
  double dw_last_ = 0.0, dw_cur_ = 0.0;
  double theta_max_ = 0.0, theta_min_ = 0.0;
  std::vector<std::pair<double, double>> filter_;
};

}  // namespace

std::string ToString(IpmStatus s) {
  switch (s) {
    case IpmStatus::kConverged: return "converged";
    case IpmStatus::kMaxIterations: return "max_iterations";
    case IpmStatus::kLineSearchFailed: return "line_search_failed";
    case IpmStatus::kNumericalError: return "numerical_error";
    case IpmStatus::kStoppedEarly: return "stopped_early";
    case IpmStatus::kInfeasible: return "locally_infeasible";
  }
  return "unknown";
}

IpmResult SolveIpm(const SparseNlp& nlp, const Eigen::VectorXd& w0,
                   const IpmOptions& opts) {
  Solver solver(nlp, opts);
  return solver.Run(w0);
}

}  // namespace gcnet
