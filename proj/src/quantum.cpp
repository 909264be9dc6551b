#include "bellscope/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bellscope/errors.hpp"
#include "bellscope/io.hpp"
#include "bellscope/parallel.hpp"
#include "bellscope/rng.hpp"
#include "bellscope/sdp.hpp"

namespace bellscope {

namespace {

using cd = std::complex<double>;

CMat kron(const CMat& A, const CMat& B) {
    CMat K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

double hermitian_error(const CMat& M) { return (M - M.adjoint()).cwiseAbs().maxCoeff(); }

double min_eigenvalue(const CMat& M) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (M + M.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

BellFunctional full_form(const BellFunctional& f) {
    return f.form == Form::Full ? f : full_from_cg(f);
}

}  // namespace

DensityMatrix::DensityMatrix(int da, int db, CMat m) : dim_a(da), dim_b(db), matrix(std::move(m)) { validate(); }

DensityMatrix DensityMatrix::pure(const CVec& psi, int da, int db) {
    if (psi.size() != da * db) throw ValidationError("state vector length does not match dimensions");
    double n = psi.norm();
    if (n == 0.0) throw ValidationError("zero state vector");
    CVec v = psi / n;
    return DensityMatrix(da, db, v * v.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int da, int db) {
    int D = da * db;
    return DensityMatrix(da, db, CMat::Identity(D, D) / static_cast<double>(D));
}

void DensityMatrix::validate() const {
    if (dim_a < 1 || dim_b < 1) throw ValidationError("state dimensions must be positive");
    const int D = dim_a * dim_b;
    if (matrix.rows() != D || matrix.cols() != D) throw ValidationError("state matrix has the wrong size");
    if (hermitian_error(matrix) > 1e-12) throw ValidationError("state is not Hermitian");
    if (std::abs(matrix.trace() - cd(1.0)) > 1e-12) throw ValidationError("state trace is not 1");
    if (min_eigenvalue(matrix) < -1e-10) throw ValidationError("state has a negative eigenvalue");
}

bool Povm::projective(double tol) const {
    for (const auto& M : elements)
        if ((M * M - M).cwiseAbs().maxCoeff() > tol) return false;
    return true;
}

void Povm::validate() const {
    if (elements.empty()) throw ValidationError("POVM has no elements");
    const int d = dim();
    CMat sum = CMat::Zero(d, d);
    for (const auto& M : elements) {
        if (M.rows() != d || M.cols() != d) throw ValidationError("POVM elements differ in size");
        if (hermitian_error(M) > 1e-10) throw ValidationError("POVM element is not Hermitian");
        if (min_eigenvalue(M) < -1e-10) throw ValidationError("POVM element is not positive");
        sum += M;
    }
    if ((sum - CMat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
        throw ValidationError("POVM elements do not sum to the identity");
}

Povm Povm::from_basis(const CMat& U, int outcomes) {
    const int d = static_cast<int>(U.rows());
    std::vector<CMat> el(outcomes, CMat::Zero(d, d));
    for (int k = 0; k < d; ++k) el[std::min(k, outcomes - 1)] += U.col(k) * U.col(k).adjoint();
    return Povm(std::move(el));
}

Scenario Realization::scenario() const {
    std::vector<int> oa, ob;
    for (const auto& p : povms_a) oa.push_back(p.outcomes());
    for (const auto& p : povms_b) ob.push_back(p.outcomes());
    return Scenario(oa, ob);
}

void Realization::validate() const {
    state.validate();
    if (povms_a.empty() || povms_b.empty()) throw ValidationError("realization needs measurements for both parties");
    for (const auto& p : povms_a) {
        p.validate();
        if (p.dim() != state.dim_a) throw ValidationError("Alice POVM dimension does not match the state");
    }
    for (const auto& p : povms_b) {
        p.validate();
        if (p.dim() != state.dim_b) throw ValidationError("Bob POVM dimension does not match the state");
    }
}

ProbabilityTable correlation(const Realization& r) {
    r.validate();
    Scenario s = r.scenario();
    std::vector<double> p(s.full_dimension(), 0.0);
    const CMat& rho = r.state.matrix;
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y) {
            double total = 0.0;
            for (int a = 0; a < s.outputs_a(x); ++a)
                for (int b = 0; b < s.outputs_b(y); ++b) {
                    CMat K = kron(r.povms_a[x].elements[a], r.povms_b[y].elements[b]);
                    double v = (rho.cwiseProduct(K.transpose())).sum().real();
                    v = std::max(v, 0.0);
                    p[s.full_index(x, y, a, b)] = v;
                    total += v;
                }
            for (int a = 0; a < s.outputs_a(x); ++a)
                for (int b = 0; b < s.outputs_b(y); ++b) p[s.full_index(x, y, a, b)] /= total;
        }
    return ProbabilityTable(s, std::move(p));
}

DensityMatrix psi_gamma(double gamma, double gamma_prime) {
    if (gamma < 0.0 || gamma_prime < 0.0) throw ValidationError("gamma parameters must be nonnegative");
    CVec psi = CVec::Zero(9);
    psi(0) = 1.0;
    psi(4) = gamma;
    psi(8) = gamma_prime;
    return DensityMatrix::pure(psi, 3, 3);
}

CMat partial_transpose_b(const CMat& rho, int da, int db) {
    CMat out(rho.rows(), rho.cols());
    for (int i = 0; i < da; ++i)
        for (int k = 0; k < da; ++k)
            out.block(i * db, k * db, db, db) = rho.block(i * db, k * db, db, db).transpose();
    return out;
}

double negativity(const DensityMatrix& rho) {
    CMat pt = partial_transpose_b(rho.matrix, rho.dim_a, rho.dim_b);
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (pt + pt.adjoint()), Eigen::EigenvaluesOnly);
    return std::max(0.0, (es.eigenvalues().cwiseAbs().sum() - 1.0) / 2.0);
}

CMat bell_operator(const BellFunctional& f, const std::vector<Povm>& pa, const std::vector<Povm>& pb) {
    BellFunctional F = full_form(f);
    const Scenario& s = F.scenario;
    if (static_cast<int>(pa.size()) != s.inputs_a() || static_cast<int>(pb.size()) != s.inputs_b())
        throw ValidationError("measurement count does not match the functional's scenario");
    const int da = pa.front().dim(), db = pb.front().dim();
    CMat B = CMat::Zero(da * db, da * db);
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y)
            for (int a = 0; a < s.outputs_a(x); ++a) {
                CMat K = CMat::Zero(db, db);
                bool any = false;
                for (int b = 0; b < s.outputs_b(y); ++b) {
                    double c = F.coefficients[s.full_index(x, y, a, b)];
                    if (c == 0.0) continue;
                    K += c * pb[y].elements.at(b);
                    any = true;
                }
                if (any) B += kron(pa[x].elements.at(a), K);
            }
    return B;
}

double bell_value(const BellFunctional& f, const Realization& r) {
    BellFunctional F = full_form(f);
    CMat B = bell_operator(F, r.povms_a, r.povms_b);
    return (r.state.matrix.cwiseProduct(B.transpose())).sum().real() + F.offset;
}

double infer_state_visibility(double s_exp, const Realization& r, const BellFunctional& f) {
    Realization iso = r;
    iso.state = DensityMatrix::maximally_mixed(r.state.dim_a, r.state.dim_b);
    double ideal = bell_value(f, r), noise = bell_value(f, iso);
    if (std::abs(ideal - noise) < 1e-12) throw ValidationError("ideal and noise values coincide");
    return std::clamp((s_exp - noise) / (ideal - noise), 0.0, 1.0);
}

Povm project_povm_to_subspace(const Povm& p, int rank) {
    p.validate();
    if (rank < 1 || rank > p.dim()) throw ValidationError("subspace rank out of range");
    Povm out;
    for (const auto& M : p.elements) {
        CMat m = M.topLeftCorner(rank, rank);
        if (min_eigenvalue(m) < -1e-10) throw std::logic_error("compressed POVM element is not positive");
        out.elements.push_back(m);
    }
    return out;
}

Realization reference_i12_realization() {
    const cd i(0.0, 1.0);
    std::vector<CMat> oa(3, CMat(3, 3)), ob(3, CMat(3, 3));
    oa[0] << 0.9835, 0, -0.1809,
             0.1809, 0, 0.9835,
             0, 1, 0;
    oa[1] << 0.8826, -0.4642, 0.0742,
             0.4626, 0.8857, 0.0389,
             0.0492 - 0.0678 * i, 0, -0.5851 + 0.8066 * i;
    oa[2] << -0.9117, 0.4108, 0,
             0.4108, 0.9117, 0,
             0, 0, 1;
    ob[0] << 0.9974, 0, -0.0721,
             0.0721, 0, 0.9974,
             0, 1, 0;
    ob[1] << -0.8799, 0.2668, -0.3932,
             0.2436, 0.9637, 0.1089,
             -0.4080 - 0.0004 * i, 0, 0.9130 + 0.0008 * i;
    ob[2] << 0.7478, -0.6639, 0,
             0.6639, 0.7478, 0,
             0, 0, 1;
    // printed to four decimals; snap to the nearest unitary
    auto snap = [](const CMat& W) {
        Eigen::JacobiSVD<CMat> svd(W, Eigen::ComputeFullU | Eigen::ComputeFullV);
        return CMat(svd.matrixU() * svd.matrixV().adjoint());
    };
    Realization r;
    CVec psi = CVec::Zero(9);
    psi(0) = 0.7258;
    psi(4) = 0.6879;
    r.state = DensityMatrix::pure(psi, 3, 3);
    for (int x = 0; x < 3; ++x) {
        r.povms_a.push_back(Povm::from_basis(snap(oa[x]), 3));
        r.povms_b.push_back(Povm::from_basis(snap(ob[x]), 3));
    }
    return r;
}

CMat haar_unitary(int d, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> nd;
    CMat Z(d, d);
    for (int c = 0; c < d; ++c)
        for (int r = 0; r < d; ++r) Z(r, c) = cd(nd(eng), nd(eng));
    Eigen::HouseholderQR<CMat> qr(Z);
    CMat Q = qr.householderQ();
    CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < d; ++k) {
        double m = std::abs(R(k, k));
        if (m > 0) Q.col(k) *= R(k, k) / m;
    }
    return Q;
}

// ---------------------------------------------------------------- seesaw

namespace {

double expect_sum(const std::vector<CMat>& M, const std::vector<CMat>& C) {
    double v = 0.0;
    for (std::size_t a = 0; a < M.size(); ++a) v += (M[a].cwiseProduct(C[a].transpose())).sum().real();
    return v;
}

// max sum_a tr(M_a C_a) over POVMs, solved as a real SDP
std::vector<CMat> best_povm(const std::vector<CMat>& C) {
    const int n = static_cast<int>(C.size());
    const int d = static_cast<int>(C.front().rows());
    // per outcome: Re M_ij (i <= j), Im M_ij (i < j)
    const int per = d * d;
    auto re = [&](int a, int i, int j) { return a * per + i * d + j; };  // i <= j
    auto im = [&](int a, int i, int j) { return a * per + j * d + i; };  // i < j, lower slot
    SdpProblem p(n * per);
    for (int a = 0; a < n; ++a) {
        int blk = p.add_block(2 * d);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                const double w = i == j ? 1.0 : 2.0;
                p.set_objective(re(a, i, j), w * C[a](i, j).real());
                p.add_term(blk, re(a, i, j), i, j, 1.0);
                p.add_term(blk, re(a, i, j), d + i, d + j, 1.0);
                if (i == j) continue;
                // M_ij = R + iI, and C_ji = conj(C_ij)
                p.set_objective(im(a, i, j), w * C[a](i, j).imag());
                p.add_term(blk, im(a, i, j), i, d + j, -1.0);
                p.add_term(blk, im(a, i, j), j, d + i, 1.0);
            }
    }
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            std::vector<std::pair<int, double>> row, irow;
            for (int a = 0; a < n; ++a) {
                row.push_back({re(a, i, j), 1.0});
                if (i != j) irow.push_back({im(a, i, j), 1.0});
            }
            p.add_equality(row, i == j ? 1.0 : 0.0);
            if (i != j) p.add_equality(irow, 0.0);
        }
    SdpOptions o;
    o.gap_tol = 1e-10;
    o.feas_tol = 1e-10;
    auto sol = sdp_solve(p, o);
    if (sol.status != SdpStatus::Optimal) return {};
    std::vector<CMat> M(n, CMat::Zero(d, d));
    for (int a = 0; a < n; ++a) {
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                cd v(sol.y(re(a, i, j)), i == j ? 0.0 : sol.y(im(a, i, j)));
                M[a](i, j) = v;
                M[a](j, i) = std::conj(v);
            }
        // clip to PSD
        Eigen::SelfAdjointEigenSolver<CMat> es(M[a]);
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        M[a] = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    }
    // restore completeness exactly
    CMat T = CMat::Zero(d, d);
    for (const auto& m : M) T += m;
    Eigen::SelfAdjointEigenSolver<CMat> es(T);
    if (es.eigenvalues().minCoeff() <= 0.0) return {};
    CMat Tih = es.operatorInverseSqrt();
    for (auto& m : M) {
        m = Tih * m * Tih;
        m = 0.5 * (m + m.adjoint());
    }
    return M;
}

// best projective measurement on a qubit: one outcome carries the identity,
// or two outcomes split a rank-1 projector pair
std::vector<CMat> best_qubit_projective(const std::vector<CMat>& C, CMat* basis = nullptr,
                                        std::vector<int>* assign = nullptr, int null_outcome = -1) {
    const int n = static_cast<int>(C.size());
    const int d = static_cast<int>(C.front().rows());
    double best = -std::numeric_limits<double>::infinity();
    std::vector<CMat> out;
    for (int a1 = 0; a1 < n; ++a1)
        for (int a2 = 0; a2 < n; ++a2) {
            if (a1 == null_outcome || a2 == null_outcome) continue;
            CMat U = CMat::Identity(d, d);
            double v;
            if (a1 == a2) {
                v = C[a1].trace().real();
            } else {
                if (a2 < a1) continue;
                Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * ((C[a1] - C[a2]) + (C[a1] - C[a2]).adjoint()));
                // top eigenvector to a1, the other to a2
                v = C[a2].trace().real() + es.eigenvalues()(d - 1);
                U.col(0) = es.eigenvectors().col(d - 1);
                U.col(1) = es.eigenvectors().col(0);
            }
            if (v > best + 1e-15) {
                best = v;
                out.assign(n, CMat::Zero(d, d));
                out[a1] += U.col(0) * U.col(0).adjoint();
                out[a2] += U.col(1) * U.col(1).adjoint();
                if (basis) *basis = U;
                if (assign) *assign = {a1, a2};
            }
        }
    return out;
}

std::vector<CMat> from_assignment(const CMat& U, const std::vector<int>& g, int n) {
    const int d = static_cast<int>(U.rows());
    std::vector<CMat> M(n, CMat::Zero(d, d));
    for (int k = 0; k < d; ++k) M[g[k]] += U.col(k) * U.col(k).adjoint();
    return M;
}

double basis_value(const CMat& U, const std::vector<int>& g, const std::vector<CMat>& C) {
    double v = 0.0;
    for (int k = 0; k < U.cols(); ++k) v += (U.col(k).adjoint() * C[g[k]] * U.col(k))(0, 0).real();
    return v;
}

// rank-1 projective measurement from the current one: eigenbasis of the elements
void basis_of(const std::vector<CMat>& M, CMat& U, std::vector<int>& g) {
    const int d = static_cast<int>(M.front().rows());
    U.resize(d, d);
    g.clear();
    int k = 0;
    for (int a = 0; a < static_cast<int>(M.size()) && k < d; ++a) {
        Eigen::SelfAdjointEigenSolver<CMat> es(M[a]);
        for (int j = d - 1; j >= 0 && k < d; --j)
            if (es.eigenvalues()(j) > 0.5) {
                U.col(k++) = es.eigenvectors().col(j);
                g.push_back(a);
            }
    }
    if (k < d) {
        // complete with Gram-Schmidt against the identity
        for (int e = 0; e < d && k < d; ++e) {
            CVec v = CVec::Unit(d, e);
            for (int j = 0; j < k; ++j) v -= U.col(j) * (U.col(j).adjoint() * v)(0, 0);
            if (v.norm() > 1e-6) {
                U.col(k++) = v.normalized();
                g.push_back(0);
            }
        }
    }
    // re-orthonormalize against drift
    Eigen::JacobiSVD<CMat> svd(U, Eigen::ComputeFullU | Eigen::ComputeFullV);
    U = svd.matrixU() * svd.matrixV().adjoint();
}

// projective update in dimension >= 3: polar steps on the basis with greedy
// outcome assignment, then exact qubit updates on every pair of basis vectors
std::vector<CMat> best_projective(const std::vector<CMat>& C, const std::vector<CMat>& current, int null_outcome) {
    const int n = static_cast<int>(C.size());
    const int d = static_cast<int>(C.front().rows());
    if (d == 2) return best_qubit_projective(C, nullptr, nullptr, null_outcome);
    CMat U;
    std::vector<int> g;
    basis_of(current, U, g);
    // shift to positive definite; the shift adds a constant to the value
    double shift = 0.0;
    for (const auto& c : C) shift = std::max(shift, -min_eigenvalue(c));
    shift += 1.0;
    std::vector<CMat> Cs;
    for (const auto& c : C) Cs.push_back(c + shift * CMat::Identity(d, d));
    double v = basis_value(U, g, Cs);
    for (int round = 0; round < 4; ++round) {
        double start = v;
        for (int it = 0; it < 100; ++it) {
            for (int k = 0; k < d; ++k) {
                int best = g[k];
                double bv = (U.col(k).adjoint() * Cs[best] * U.col(k))(0, 0).real();
                for (int a = 0; a < n; ++a) {
                    double w = (U.col(k).adjoint() * Cs[a] * U.col(k))(0, 0).real();
                    if (w > bv + 1e-15) {
                        bv = w;
                        best = a;
                    }
                }
                g[k] = best;
            }
            CMat Z(d, d);
            for (int k = 0; k < d; ++k) Z.col(k) = Cs[g[k]] * U.col(k);
            Eigen::JacobiSVD<CMat> svd(Z, Eigen::ComputeFullU | Eigen::ComputeFullV);
            CMat Un = svd.matrixU() * svd.matrixV().adjoint();
            double vn = basis_value(Un, g, Cs);
            if (vn <= v + 1e-14) break;
            U = Un;
            v = vn;
        }
        for (int k = 0; k < d; ++k)
            for (int l = k + 1; l < d; ++l) {
                CMat V(d, 2);
                V.col(0) = U.col(k);
                V.col(1) = U.col(l);
                std::vector<CMat> Cr;
                for (const auto& c : Cs) Cr.push_back(V.adjoint() * c * V);
                CMat W;
                std::vector<int> ga;
                best_qubit_projective(Cr, &W, &ga);
                std::vector<int> gn = g;
                CMat Un = U;
                Un.col(k) = V * W.col(0);
                Un.col(l) = V * W.col(1);
                gn[k] = ga[0];
                gn[l] = ga[1];
                double vn = basis_value(Un, gn, Cs);
                if (vn > v + 1e-14) {
                    U = Un;
                    g = gn;
                    v = vn;
                }
            }
        if (v <= start + 1e-13) break;
    }
    return from_assignment(U, g, n);
}

struct Run {
    double value = -std::numeric_limits<double>::infinity();
    Realization r;
    std::vector<double> trace;
    bool converged = false;
};

// alternate state and measurement updates from the given measurements
Run descend(const BellFunctional& F, int da, int db, const SeesawOptions& opt, std::vector<Povm> pa,
            std::vector<Povm> pb, const CVec* psi0 = nullptr, const std::vector<int>* null_a = nullptr,
            const std::vector<int>* null_b = nullptr) {
    const Scenario& s = F.scenario;
    Run run;
    auto coef = [&](int x, int y, int a, int b) { return F.coefficients[s.full_index(x, y, a, b)]; };
    auto update = [&](const std::vector<CMat>& C, const std::vector<CMat>& current, int null_outcome) {
        if (opt.mode == MeasurementMode::Povm) return best_povm(C);
        return best_projective(C, current, null_outcome);
    };

    double prev = -std::numeric_limits<double>::infinity();
    int stalled = 0;
    CVec psi;
    for (int it = 0; it < opt.max_iterations; ++it) {
        // state: top eigenvector of the Bell operator
        if (it == 0 && psi0) {
            psi = *psi0;
        } else {
            CMat B = bell_operator(F, pa, pb);
            Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (B + B.adjoint()));
            psi = es.eigenvectors().col(da * db - 1);
        }
        CMat Psi(da, db);
        for (int i = 0; i < da; ++i)
            for (int j = 0; j < db; ++j) Psi(i, j) = psi(i * db + j);

        // Alice
        for (int x = 0; x < s.inputs_a(); ++x) {
            std::vector<CMat> C;
            for (int a = 0; a < s.outputs_a(x); ++a) {
                CMat K = CMat::Zero(db, db);
                for (int y = 0; y < s.inputs_b(); ++y)
                    for (int b = 0; b < s.outputs_b(y); ++b)
                        if (double c = coef(x, y, a, b)) K += c * pb[y].elements[b];
                C.push_back(Psi * K.transpose() * Psi.adjoint());
            }
            auto M = update(C, pa[x].elements, null_a ? (*null_a)[x] : -1);
            if (!M.empty() && expect_sum(M, C) > expect_sum(pa[x].elements, C)) pa[x].elements = std::move(M);
        }
        // Bob
        for (int y = 0; y < s.inputs_b(); ++y) {
            std::vector<CMat> C;
            for (int b = 0; b < s.outputs_b(y); ++b) {
                CMat L = CMat::Zero(da, da);
                for (int x = 0; x < s.inputs_a(); ++x)
                    for (int a = 0; a < s.outputs_a(x); ++a)
                        if (double c = coef(x, y, a, b)) L += c * pa[x].elements[a];
                C.push_back(Psi.transpose() * L.transpose() * Psi.conjugate());
            }
            auto N = update(C, pb[y].elements, null_b ? (*null_b)[y] : -1);
            if (!N.empty() && expect_sum(N, C) > expect_sum(pb[y].elements, C)) pb[y].elements = std::move(N);
        }

        CMat B2 = bell_operator(F, pa, pb);
        double v = (psi.adjoint() * B2 * psi)(0, 0).real() + F.offset;
        if (v < prev - 1e-9 * (1.0 + std::abs(prev))) throw SolverError("seesaw value decreased");
        run.trace.push_back(v);
        if (v - prev < opt.tol) {
            if (++stalled >= opt.stall_sweeps) {
                run.converged = true;
                prev = std::max(prev, v);
                break;
            }
        } else {
            stalled = 0;
        }
        prev = std::max(prev, v);
    }
    // final state for the final measurements
    CMat B = bell_operator(F, pa, pb);
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (B + B.adjoint()));
    psi = es.eigenvectors().col(da * db - 1);
    run.value = es.eigenvalues()(da * db - 1) + F.offset;
    run.r.state = DensityMatrix::pure(psi, da, db);
    run.r.povms_a = std::move(pa);
    run.r.povms_b = std::move(pb);
    return run;
}

// Settings whose outcome count exceeds the local dimension by one carry
// exactly one zero element in a rank-1 projective qubit strategy.
std::vector<int> sweepable(const std::vector<int>& outputs, int d) {
    std::vector<int> out;
    for (int o : outputs) out.push_back(o == d + 1 ? o : 1);
    return out;
}

Run seesaw_run(const BellFunctional& F, int da, int db, const SeesawOptions& opt, std::size_t restart) {
    const Scenario& s = F.scenario;
    std::mt19937_64 eng(stream_key(opt.seed, {restart}));
    auto haar_povm = [&](int d, int outcomes, int null_outcome) {
        CMat U = haar_unitary(d, eng());
        std::vector<int> perm;
        for (int a = 0; a < outcomes; ++a)
            if (a != null_outcome) perm.push_back(a);
        std::shuffle(perm.begin(), perm.end(), eng);
        std::vector<CMat> el(outcomes, CMat::Zero(d, d));
        const int slots = static_cast<int>(perm.size());
        for (int k = 0; k < d; ++k) el[perm[std::min(k, slots - 1)]] += U.col(k) * U.col(k).adjoint();
        return Povm(std::move(el));
    };
    auto start = [&](const std::vector<int>& na, const std::vector<int>& nb, const SeesawOptions& o) {
        std::vector<Povm> pa, pb;
        for (int x = 0; x < s.inputs_a(); ++x) pa.push_back(haar_povm(da, s.outputs_a(x), na[x]));
        for (int y = 0; y < s.inputs_b(); ++y) pb.push_back(haar_povm(db, s.outputs_b(y), nb[y]));
        CVec psi0 = haar_unitary(da * db, eng()).col(0);
        return descend(F, da, db, o, std::move(pa), std::move(pb), &psi0, &na, &nb);
    };

    std::vector<int> free_a(s.inputs_a(), -1), free_b(s.inputs_b(), -1);
    Run best = start(free_a, free_b, opt);

    if (opt.zero_sweep) {
        auto ra = sweepable(s.outputs_a(), da), rb = sweepable(s.outputs_b(), db);
        std::size_t patterns = 1;
        for (int r : ra) patterns *= r;
        for (int r : rb) patterns *= r;
        // restarts share the zero-element assignments round robin; the
        // assignments are explored with projective updates
        SeesawOptions proj = opt;
        proj.mode = MeasurementMode::Projective;
        Run sweep;
        for (std::size_t p = restart; patterns > 1 && p < patterns; p += static_cast<std::size_t>(opt.restarts)) {
            std::size_t q = p;
            std::vector<int> na(s.inputs_a(), -1), nb(s.inputs_b(), -1);
            for (int x = 0; x < s.inputs_a(); ++x) {
                if (ra[x] > 1) na[x] = static_cast<int>(q % ra[x]);
                q /= ra[x];
            }
            for (int y = 0; y < s.inputs_b(); ++y) {
                if (rb[y] > 1) nb[y] = static_cast<int>(q % rb[y]);
                q /= rb[y];
            }
            Run r = start(na, nb, proj);
            if (r.value > sweep.value + 1e-12) sweep = std::move(r);
        }
        if (!sweep.r.povms_a.empty()) {
            // release the zero elements and polish in the requested mode
            Run r = descend(F, da, db, opt, sweep.r.povms_a, sweep.r.povms_b);
            if (r.value > best.value + 1e-12) best = std::move(r);
        }
    }
    return best;
}

}  // namespace

SeesawResult seesaw_maximize(const BellFunctional& f, int dim_a, int dim_b, const SeesawOptions& opt) {
    f.validate();
    if (dim_a < 2 || dim_b < 2) throw ValidationError("seesaw dimensions must be at least 2");
    if (opt.restarts < 1) throw ValidationError("restarts must be positive");
    BellFunctional F = full_form(opt.side == Side::Max ? f : f.negated());
    std::vector<Run> runs(opt.restarts);
    parallel_for(
        runs.size(), [&](std::size_t k) { runs[k] = seesaw_run(F, dim_a, dim_b, opt, k); },
        opt.threads);
    SeesawResult res;
    std::size_t best = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        res.restart_values.push_back(opt.side == Side::Max ? runs[k].value : -runs[k].value);
        if (runs[k].value > runs[best].value) best = k;
    }
    res.best_restart = static_cast<int>(best);
    res.value = opt.side == Side::Max ? runs[best].value : -runs[best].value;
    res.realization = std::move(runs[best].r);
    res.trace = std::move(runs[best].trace);
    if (opt.side == Side::Min)
        for (double& v : res.trace) v = -v;
    res.converged = runs[best].converged;
    return res;
}

// ---------------------------------------------------------------- text format

namespace {

CMat read_matrix(TokenStream& ts, int d) {
    CMat M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = ts.next_complex();
    return M;
}

void write_matrix(std::ostream& out, const CMat& M) {
    for (int i = 0; i < M.rows(); ++i) {
        for (int j = 0; j < M.cols(); ++j) out << (j ? " " : "") << format_complex(M(i, j));
        out << "\n";
    }
}

}  // namespace

Realization parse_realization(const std::string& text) {
    std::istringstream in(text);
    TokenStream ts(in);
    Scenario s = parse_scenario_line(ts);
    ts.expect("dims");
    int da = ts.next_int(), db = ts.next_int();
    if (da < 1 || db < 1) throw ParseError("dimensions must be positive", ts.last_line(), 1);
    ts.expect("state");
    Realization r;
    CMat rho = read_matrix(ts, da * db);
    r.state.dim_a = da;
    r.state.dim_b = db;
    r.state.matrix = rho;
    auto read_party = [&](const char* tag, int inputs, auto outputs, int d, std::vector<Povm>& dst) {
        for (int x = 0; x < inputs; ++x) {
            ts.expect("povm");
            ts.expect(tag);
            Token t = ts.peek();
            if (ts.next_int() != x) throw ParseError("measurement blocks out of order", t.line, t.column);
            Povm p;
            for (int a = 0; a < outputs(x); ++a) {
                ts.expect("outcome");
                Token u = ts.peek();
                if (ts.next_int() != a) throw ParseError("outcomes out of order", u.line, u.column);
                p.elements.push_back(read_matrix(ts, d));
            }
            dst.push_back(std::move(p));
        }
    };
    read_party("A", s.inputs_a(), [&](int x) { return s.outputs_a(x); }, da, r.povms_a);
    read_party("B", s.inputs_b(), [&](int y) { return s.outputs_b(y); }, db, r.povms_b);
    if (!ts.done()) {
        Token t = ts.peek();
        throw ParseError("unexpected trailing token '" + t.text + "'", t.line, t.column);
    }
    r.validate();
    return r;
}

std::string serialize_realization(const Realization& r) {
    std::ostringstream out;
    out << scenario_line(r.scenario()) << "\n";
    out << "dims " << r.state.dim_a << " " << r.state.dim_b << "\n";
    out << "state\n";
    write_matrix(out, r.state.matrix);
    auto party = [&](const char* tag, const std::vector<Povm>& ps) {
        for (std::size_t x = 0; x < ps.size(); ++x) {
            out << "povm " << tag << " " << x << "\n";
            for (std::size_t a = 0; a < ps[x].elements.size(); ++a) {
                out << "outcome " << a << "\n";
                write_matrix(out, ps[x].elements[a]);
            }
        }
    };
    party("A", r.povms_a);
    party("B", r.povms_b);
    return out.str();
}

}  // namespace bellscope
