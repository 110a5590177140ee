#include "qtrack/coupled_core.hpp"

#include <cmath>
#include <sstream>

namespace qtrack {

namespace {

const std::complex<double> kI{0.0, 1.0};

Eigen::MatrixXcd symmetrized(const Eigen::MatrixXcd& A, double* asymmetry) {
    const double norm = A.norm();
    if (asymmetry) *asymmetry = norm > 0.0 ? (A - A.transpose()).norm() / norm : 0.0;
    return 0.5 * (A + A.transpose());
}

void require_symmetric(double asym) {
    if (!(asym <= kAsymmetryTol)) {
        std::ostringstream msg;
        msg << "evolved A lost symmetry (relative asymmetry " << asym << ")";
        throw SolveFailure(msg.str());
    }
}

// y = W q maps a quadratic form A in q to W^{-T} A W^{-1} in y.
Eigen::MatrixXcd to_modes(const Eigen::MatrixXcd& A, const Eigen::MatrixXd& W_inv_T) {
    return W_inv_T * A * W_inv_T.transpose();
}

}  // namespace

void EnsembleSpec::validate() const {
    if (frequencies.size() != masses.size() || couplings.size() != masses.size())
        throw DomainError("ensemble arrays must all have length N");
    for (std::size_t j = 0; j < masses.size(); ++j) {
        if (!(masses[j] > 0.0) || !std::isfinite(masses[j])) throw DomainError("bath masses must be positive");
        if (!(frequencies[j] > 0.0) || !std::isfinite(frequencies[j]))
            throw DomainError("bath frequencies must be positive");
        if (!std::isfinite(couplings[j])) throw DomainError("bath couplings must be finite");
    }
}

EnsembleSpec to_natural(const EnsembleSpec& ens, const OscillatorParams& main) {
    EnsembleSpec out = ens;
    const double cscale = main.mass * main.omega * main.omega;
    for (std::size_t j = 0; j < ens.size(); ++j) {
        out.masses[j] = ens.masses[j] / main.mass;
        out.frequencies[j] = ens.frequencies[j] / main.omega;
        out.couplings[j] = ens.couplings[j] / cscale;
    }
    return out;
}

Eigen::MatrixXd SystemMatrices::normal_transform() const {
    return U * mass.cwiseSqrt().asDiagonal();
}

SystemMatrices build_matrices(const OscillatorParams& main, const EnsembleSpec& ens) {
    main.validate();
    ens.validate();
    const auto n = static_cast<Eigen::Index>(ens.size());
    SystemMatrices sys;
    sys.mass.resize(n + 1);
    sys.mass(0) = main.mass;
    sys.K = Eigen::MatrixXd::Zero(n + 1, n + 1);
    double k00 = main.omega * main.omega;
    for (Eigen::Index j = 1; j <= n; ++j) {
        const double mj = ens.masses[j - 1];
        const double wj = ens.frequencies[j - 1];
        const double cj = ens.couplings[j - 1];
        sys.mass(j) = mj;
        k00 += cj * cj / (main.mass * mj * wj * wj);
        sys.K(0, j) = sys.K(j, 0) = -cj / std::sqrt(main.mass * mj);
        sys.K(j, j) = wj * wj;
    }
    sys.K(0, 0) = k00;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.K);
    if (es.info() != Eigen::Success) throw EigenFailure("eigendecomposition of K did not converge");
    sys.lambda = es.eigenvalues();
    sys.U = es.eigenvectors().transpose();
    if (sys.lambda.minCoeff() <= 0.0) {
        std::ostringstream msg;
        msg << "frequency-coupling matrix has a non-positive eigenvalue " << sys.lambda.minCoeff();
        throw NonPositiveSpectrum(msg.str());
    }
    return sys;
}

EvolutionOperators evolution_operators(const SystemMatrices& sys, double t, double hbar, double eps_sing) {
    const Eigen::Index d = sys.dim();
    Eigen::VectorXd cot_part(d), csc_part(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double s = std::sqrt(sys.lambda(j));
        const double sn = std::sin(s * t);
        if (!(std::fabs(sn) > eps_sing)) {
            std::ostringstream msg;
            msg << "propagator singular: |sin(sqrt(lambda_" << j << ") t)| = " << std::fabs(sn)
                << " <= " << eps_sing << "; perturb tau";
            throw PropagatorSingularity(msg.str());
        }
        cot_part(j) = s * std::cos(s * t) / sn;
        csc_part(j) = s / sn;
    }
    const Eigen::MatrixXd W = sys.normal_transform();
    Eigen::MatrixXd Cr = W.transpose() * cot_part.asDiagonal() * W;
    Eigen::MatrixXd Sr = W.transpose() * csc_part.asDiagonal() * W;
    Cr = 0.5 * (Cr + Cr.transpose()).eval();
    Sr = 0.5 * (Sr + Sr.transpose()).eval();
    const std::complex<double> f = -kI / hbar;
    return {f * Cr.cast<std::complex<double>>(), f * Sr.cast<std::complex<double>>(), t};
}

ModePropagator mode_propagator(const SystemMatrices& sys, double t, double hbar) {
    const Eigen::Index d = sys.dim();
    ModePropagator p;
    p.cos_t.resize(d);
    p.sin_over_freq.resize(d);
    p.freq_times_sin.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double s = std::sqrt(sys.lambda(j));
        const double sn = std::sin(s * t);
        p.cos_t(j) = std::cos(s * t);
        p.sin_over_freq(j) = sn / s;
        p.freq_times_sin(j) = s * sn;
    }
    p.W = sys.normal_transform();
    p.W_inv_T = sys.U * sys.mass.cwiseSqrt().cwiseInverse().asDiagonal();
    p.hbar = hbar;
    p.tau = t;
    return p;
}

CovariancePropagation propagate_covariance(const Eigen::MatrixXcd& A0, const EvolutionOperators& ops) {
    // A(t) = C - S^T [A0 + C]^-1 S, with one step of iterative refinement.
    const Eigen::MatrixXcd M = A0 + ops.C;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    Eigen::MatrixXcd X = lu.solve(ops.S);
    X += lu.solve(ops.S - M * X);

    CovariancePropagation out;
    out.audit.rcond = lu.rcond();
    out.A = symmetrized(ops.C - ops.S.transpose() * X, &out.audit.asymmetry);
    require_symmetric(out.audit.asymmetry);
    // S^T [A0 + C]^-1 = X^T because A0 + C is symmetric.
    out.G = X.transpose();
    return out;
}

CovariancePropagation propagate_covariance(const Eigen::MatrixXcd& A0, const ModePropagator& ops) {
    // Per mode: Gamma = i hbar A_y evolves as (-s sin + cos Gamma)(cos + sin/s Gamma)^-1.
    const Eigen::MatrixXcd gamma0 = (kI * ops.hbar) * to_modes(A0, ops.W_inv_T);
    const Eigen::MatrixXcd X = ops.cos_t.cast<std::complex<double>>().asDiagonal().toDenseMatrix() +
                               ops.sin_over_freq.asDiagonal() * gamma0;
    const Eigen::MatrixXcd Y = ops.cos_t.asDiagonal() * gamma0 -
                               ops.freq_times_sin.cast<std::complex<double>>().asDiagonal().toDenseMatrix();
    // Gamma(t) = Y X^-1 = (X^-T Y^T)^T.
    const Eigen::MatrixXcd Xt = X.transpose();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Xt);
    const Eigen::MatrixXcd Yt = Y.transpose();
    Eigen::MatrixXcd Z = lu.solve(Yt);
    Z += lu.solve(Yt - Xt * Z);

    CovariancePropagation out;
    out.audit.rcond = lu.rcond();
    const Eigen::MatrixXcd Ay = (-kI / ops.hbar) * Z.transpose();
    const Eigen::MatrixXd& W = ops.W;
    out.A = symmetrized(W.transpose() * Ay * W, &out.audit.asymmetry);
    require_symmetric(out.audit.asymmetry);
    // b_y(t) = X^-T b_y(0); in q coordinates G = W^T X^-T W^-T.
    Eigen::MatrixXcd Gy = lu.solve(ops.W_inv_T.cast<std::complex<double>>());
    Gy += lu.solve(ops.W_inv_T.cast<std::complex<double>>() - Xt * Gy);
    out.G = W.transpose() * Gy;
    return out;
}

namespace {

template <class Propagator>
CoupledGaussianState evolve_impl(const CoupledGaussianState& s, const Propagator& ops, EvolveAudit* audit) {
    CovariancePropagation prop = propagate_covariance(s.A, ops);
    if (audit) *audit = prop.audit;
    CoupledGaussianState out{std::move(prop.A), prop.G * s.b};
    Eigen::LLT<Eigen::MatrixXd> llt(out.A.real());
    if (llt.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "Re(A) lost positive definiteness after evolution (min eig " << check_pd_real(out.A).min_eig
            << ", rcond " << prop.audit.rcond << ")";
        throw SolveFailure(msg.str());
    }
    return out;
}

}  // namespace

CoupledGaussianState evolve_free_nd(const CoupledGaussianState& s, const EvolutionOperators& ops,
                                    EvolveAudit* audit) {
    return evolve_impl(s, ops, audit);
}

CoupledGaussianState evolve_free_nd(const CoupledGaussianState& s, const ModePropagator& ops, EvolveAudit* audit) {
    return evolve_impl(s, ops, audit);
}

CoupledGaussianState apply_measurement_nd(const CoupledGaussianState& s, double xbar, const MeasurementDevice& d,
                                          const OscillatorParams& main) {
    CoupledGaussianState out = s;
    const double k = main.stiffness() * d.delta;
    out.A(0, 0) += k;
    out.b(0) += k * xbar;
    return out;
}

MainReadout main_readout(const Eigen::MatrixXcd& A) {
    const Eigen::MatrixXd re = 0.5 * (A.real() + A.real().transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(re);
    if (llt.info() != Eigen::Success) throw SolveFailure("Re(A) is not positive definite");
    MainReadout out;
    out.r = llt.solve(Eigen::VectorXd::Unit(re.rows(), 0));
    out.sigma2 = 0.5 * out.r(0);
    if (!(out.sigma2 > 0.0)) throw SolveFailure("conditional variance is not positive");
    return out;
}

GaussianLaw measurement_distribution_nd(const CoupledGaussianState& s) {
    const MainReadout ro = main_readout(s.A);
    return {ro.r.dot(s.b.real()), ro.sigma2};
}

CoupledGaussianState initial_frozen_state(const OscillatorParams& main, const EnsembleSpec& ens) {
    const auto n = static_cast<Eigen::Index>(ens.size());
    CoupledGaussianState s{Eigen::MatrixXcd::Zero(n + 1, n + 1), Eigen::VectorXcd::Zero(n + 1)};
    s.A(0, 0) = main.mass * main.omega / main.hbar;
    for (Eigen::Index j = 1; j <= n; ++j) s.A(j, j) = ens.masses[j - 1] * ens.frequencies[j - 1] / main.hbar;
    return s;
}

CoupledGaussianState normal_mode_ground_state(const SystemMatrices& sys, double hbar) {
    const Eigen::MatrixXd W = sys.normal_transform();
    const Eigen::VectorXd w = sys.lambda.cwiseSqrt() / hbar;
    Eigen::MatrixXd A = W.transpose() * w.asDiagonal() * W;
    A = 0.5 * (A + A.transpose()).eval();
    return {A.cast<std::complex<double>>(), Eigen::VectorXcd::Zero(sys.dim())};
}

PdCheck check_pd_real(const Eigen::MatrixXcd& A) {
    const Eigen::MatrixXd re = 0.5 * (A.real() + A.real().transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(re, Eigen::EigenvaluesOnly);
    const double mn = es.eigenvalues().minCoeff();
    return {mn > 0.0, mn};
}

}  // namespace qtrack
