#include "bellscope/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "bellscope/errors.hpp"

namespace bellscope {

std::string to_string(SdpStatus s) {
    switch (s) {
        case SdpStatus::Optimal: return "optimal";
        case SdpStatus::Infeasible: return "infeasible";
        case SdpStatus::Unbounded: return "unbounded";
        case SdpStatus::MaxIterations: return "max_iterations";
        case SdpStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

SdpProblem::SdpProblem(int num_vars) : m_(num_vars), b_(num_vars, 0.0) {
    if (num_vars < 0) throw ValidationError("negative variable count");
}

int SdpProblem::add_var(double objective) {
    b_.push_back(objective);
    return m_++;
}

int SdpProblem::add_block(int size, BlockKind kind) {
    if (size < 1) throw ValidationError("block size must be positive");
    Block b;
    b.size = size;
    b.kind = kind;
    blocks_.push_back(std::move(b));
    return static_cast<int>(blocks_.size()) - 1;
}

namespace {

void check_entry(const SdpProblem::Block& b, int r, int c) {
    if (r < 0 || c < 0 || r >= b.size || c >= b.size) throw ValidationError("block entry out of range");
    if (b.kind == BlockKind::Diagonal && r != c) throw ValidationError("diagonal blocks take diagonal entries only");
}

}  // namespace

void SdpProblem::add_constant(int block, int r, int c, double v) {
    Block& b = blocks_.at(block);
    check_entry(b, r, c);
    if (r > c) std::swap(r, c);
    b.constant.push_back({r, c, v});
}

void SdpProblem::add_term(int block, int var, int r, int c, double v) {
    Block& b = blocks_.at(block);
    check_entry(b, r, c);
    if (var < 0 || var >= m_) throw ValidationError("variable index out of range");
    if (r > c) std::swap(r, c);
    b.terms.push_back({var, {r, c, v}});
}

void SdpProblem::add_equality(const std::vector<std::pair<int, double>>& coeffs, double rhs) {
    for (auto [i, v] : coeffs)
        if (i < 0 || i >= m_) throw ValidationError("variable index out of range");
    eq_rows_.push_back(coeffs);
    eq_rhs_.push_back(rhs);
}

void SdpProblem::write_sdpa(std::ostream& out) const {
    // SDPA: minimize c'x subject to sum_i F_i x_i - F_0 psd.
    // Here x = y, c = -b, F_i = G_i, F_0 = -C; equalities as a diagonal block pair.
    std::vector<int> sizes;
    for (const auto& b : blocks_) sizes.push_back(b.kind == BlockKind::Diagonal ? -b.size : b.size);
    const int ne = num_equalities();
    if (ne) sizes.push_back(-2 * ne);
    out << m_ << "\n" << sizes.size() << "\n";
    for (std::size_t k = 0; k < sizes.size(); ++k) out << (k ? " " : "") << sizes[k];
    out << "\n";
    char buf[64];
    for (int i = 0; i < m_; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", -b_[i]);
        out << (i ? " " : "") << buf;
    }
    out << "\n";
    auto line = [&](int mat, int blk, int r, int c, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << mat << " " << blk << " " << r + 1 << " " << c + 1 << " " << buf << "\n";
    };
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        for (const auto& e : blocks_[k].constant) line(0, static_cast<int>(k) + 1, e.row, e.col, -e.value);
        for (const auto& [i, e] : blocks_[k].terms) line(i + 1, static_cast<int>(k) + 1, e.row, e.col, e.value);
    }
    const int eb = static_cast<int>(blocks_.size()) + 1;
    for (int q = 0; q < ne; ++q) {
        // E y - e >= 0 and e - E y >= 0
        line(0, eb, 2 * q, 2 * q, eq_rhs_[q]);
        line(0, eb, 2 * q + 1, 2 * q + 1, -eq_rhs_[q]);
        for (auto [i, v] : eq_rows_[q]) {
            line(i + 1, eb, 2 * q, 2 * q, v);
            line(i + 1, eb, 2 * q + 1, 2 * q + 1, -v);
        }
    }
}

namespace {

using Entry = SdpProblem::Entry;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Standard-form data: A_i = -G_i, min <C,X> + cf'xf, A(X) + F xf = b.
struct Blk {
    BlockKind kind;
    int n;
    Mat C;                               // n x n, or n x 1 for diagonal blocks
    std::vector<int> var;                // constraints touching this block
    std::vector<std::vector<Entry>> A;   // per local constraint, r <= c
};

struct Data {
    int m = 0;
    Vec b;
    std::vector<Blk> blocks;
    Mat F;
    Vec cf;
    double normC = 0.0, normb = 0.0;
};

std::vector<Entry> merge(const std::vector<Entry>& in) {
    std::map<std::pair<int, int>, double> acc;
    for (const auto& e : in) acc[{e.row, e.col}] += e.value;
    std::vector<Entry> out;
    for (auto& [rc, v] : acc)
        if (v != 0.0) out.push_back({rc.first, rc.second, v});
    return out;
}

Data compile(const SdpProblem& p) {
    Data d;
    d.m = p.num_vars();
    d.b = Vec::Map(p.objective().data(), d.m);
    for (int k = 0; k < p.num_blocks(); ++k) {
        const auto& src = p.block(k);
        Blk blk;
        blk.kind = src.kind;
        blk.n = src.size;
        blk.C = blk.kind == BlockKind::Psd ? Mat::Zero(blk.n, blk.n) : Mat::Zero(blk.n, 1);
        for (const auto& e : src.constant) {
            if (blk.kind == BlockKind::Diagonal) {
                blk.C(e.row, 0) += e.value;
            } else {
                blk.C(e.row, e.col) += e.value;
                if (e.row != e.col) blk.C(e.col, e.row) += e.value;
            }
        }
        std::map<int, std::vector<Entry>> per;
        for (const auto& [i, e] : src.terms) per[i].push_back({e.row, e.col, -e.value});
        for (auto& [i, es] : per) {
            auto me = merge(es);
            if (me.empty()) continue;
            blk.var.push_back(i);
            blk.A.push_back(std::move(me));
        }
        d.normC += blk.C.squaredNorm();
        d.blocks.push_back(std::move(blk));
    }
    d.normC = std::sqrt(d.normC);
    const int ne = p.num_equalities();
    d.F = Mat::Zero(d.m, ne);
    d.cf = Vec::Zero(ne);
    for (int q = 0; q < ne; ++q) {
        for (auto [i, v] : p.equality_rows()[q]) d.F(i, q) += v;
        d.cf(q) = p.equality_rhs()[q];
    }
    d.normb = d.b.norm();
    return d;
}

double entry_inner(const std::vector<Entry>& A, const Mat& X, bool diag) {
    double s = 0.0;
    for (const auto& e : A) {
        if (diag) s += e.value * X(e.row, 0);
        else s += e.row == e.col ? e.value * X(e.row, e.col) : 2.0 * e.value * X(e.row, e.col);
    }
    return s;
}

Vec Aop(const Data& d, const std::vector<Mat>& X) {
    Vec out = Vec::Zero(d.m);
    for (std::size_t k = 0; k < d.blocks.size(); ++k) {
        const Blk& b = d.blocks[k];
        for (std::size_t l = 0; l < b.var.size(); ++l)
            out(b.var[l]) += entry_inner(b.A[l], X[k], b.kind == BlockKind::Diagonal);
    }
    return out;
}

std::vector<Mat> Aadj(const Data& d, const Vec& y) {
    std::vector<Mat> out;
    for (const Blk& b : d.blocks) {
        Mat M = b.kind == BlockKind::Psd ? Mat::Zero(b.n, b.n) : Mat::Zero(b.n, 1);
        for (std::size_t l = 0; l < b.var.size(); ++l) {
            double yi = y(b.var[l]);
            if (yi == 0.0) continue;
            for (const auto& e : b.A[l]) {
                if (b.kind == BlockKind::Diagonal) {
                    M(e.row, 0) += yi * e.value;
                } else {
                    M(e.row, e.col) += yi * e.value;
                    if (e.row != e.col) M(e.col, e.row) += yi * e.value;
                }
            }
        }
        out.push_back(std::move(M));
    }
    return out;
}

double inner(const std::vector<Mat>& X, const std::vector<Mat>& S) {
    double s = 0.0;
    for (std::size_t k = 0; k < X.size(); ++k) s += X[k].cwiseProduct(S[k]).sum();
    return s;
}

double fro(const std::vector<Mat>& X) {
    double s = 0.0;
    for (const auto& M : X) s += M.squaredNorm();
    return std::sqrt(s);
}

// NT scaling of one psd block: W = G G', G^{-1} X G^{-T} = G' S G = diag(lambda).
struct Scaling {
    Mat G, Ginv, W;
    Vec lambda;
    Mat LX;  // Cholesky factor of X, for step lengths
    Mat LS;
};

bool chol(const Mat& A, Mat& L) {
    Eigen::LLT<Mat> llt(A);
    if (llt.info() != Eigen::Success) return false;
    L = llt.matrixL();
    return L.diagonal().minCoeff() > 0.0;
}

bool nt_scaling(const Mat& X, const Mat& S, Scaling& sc) {
    if (!chol(X, sc.LX) || !chol(S, sc.LS)) return false;
    Eigen::JacobiSVD<Mat> svd(sc.LS.transpose() * sc.LX, Eigen::ComputeFullU | Eigen::ComputeFullV);
    sc.lambda = svd.singularValues();
    if (sc.lambda.minCoeff() <= 0.0) return false;
    Vec isq = sc.lambda.cwiseSqrt().cwiseInverse();
    sc.G = sc.LX * svd.matrixV() * isq.asDiagonal();
    Mat LXinv = sc.LX.triangularView<Eigen::Lower>().solve(Mat::Identity(X.rows(), X.rows()));
    sc.Ginv = sc.lambda.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * LXinv;
    sc.W = sc.G * sc.G.transpose();
    return true;
}

// largest alpha with X + alpha dX psd, given X = L L'
double max_step_psd(const Mat& L, const Mat& dX) {
    Mat T = L.triangularView<Eigen::Lower>().solve(dX);
    T = L.triangularView<Eigen::Lower>().solve(T.transpose()).transpose();
    T = 0.5 * (T + T.transpose());
    double lmin = Eigen::SelfAdjointEigenSolver<Mat>(T, Eigen::EigenvaluesOnly).eigenvalues()(0);
    return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

double max_step_diag(const Mat& x, const Mat& dx) {
    double a = std::numeric_limits<double>::infinity();
    for (int i = 0; i < x.rows(); ++i)
        if (dx(i, 0) < 0.0) a = std::min(a, -x(i, 0) / dx(i, 0));
    return a;
}

}  // namespace

SdpSolution sdp_solve(const SdpProblem& problem, const SdpOptions& opt) {
    Data d = compile(problem);
    const int m = d.m;
    const int nf = static_cast<int>(d.F.cols());
    const int nb = static_cast<int>(d.blocks.size());

    SdpSolution sol;
    if (m == 0 && nb == 0) {
        sol.status = SdpStatus::Optimal;
        return sol;
    }

    // initial point
    std::vector<double> normA(m, 0.0);
    for (const Blk& b : d.blocks)
        for (std::size_t l = 0; l < b.var.size(); ++l)
            for (const auto& e : b.A[l]) normA[b.var[l]] += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
    for (double& v : normA) v = std::sqrt(v);

    std::vector<Mat> X(nb), S(nb);
    double N = 0.0;
    for (int k = 0; k < nb; ++k) {
        const Blk& b = d.blocks[k];
        double n = b.n;
        double xi = std::max(10.0, std::sqrt(n)), eta = std::max(10.0, std::sqrt(n));
        for (std::size_t l = 0; l < b.var.size(); ++l) {
            int i = b.var[l];
            xi = std::max(xi, n * (1.0 + std::abs(d.b(i))) / (1.0 + normA[i]));
            eta = std::max(eta, normA[i]);
        }
        eta = std::max(eta, b.C.norm());
        if (b.kind == BlockKind::Psd) {
            X[k] = xi * Mat::Identity(b.n, b.n);
            S[k] = eta * Mat::Identity(b.n, b.n);
        } else {
            X[k] = Mat::Constant(b.n, 1, xi);
            S[k] = Mat::Constant(b.n, 1, eta);
        }
        N += n;
    }
    Vec y = Vec::Zero(m), xf = Vec::Zero(nf);

    std::vector<Scaling> sc(nb);
    int stall = 0;
    double best_score = std::numeric_limits<double>::infinity();
    struct Snapshot {
        std::vector<Mat> X;
        Vec y, xf;
        SdpSolution metrics;
    } best;

    auto finish = [&](SdpStatus st) {
        sol.status = st;
        sol.y = y;
        sol.X = X;
        sol.S.clear();
        auto Ay = Aadj(d, y);
        for (int k = 0; k < nb; ++k) {
            const Blk& b = d.blocks[k];
            Mat Sk = b.C - Ay[k];
            if (b.kind == BlockKind::Diagonal) {
                Mat D = Mat::Zero(b.n, b.n);
                Mat Xd = Mat::Zero(b.n, b.n);
                D.diagonal() = Sk.col(0);
                Xd.diagonal() = X[k].col(0);
                sol.S.push_back(D);
                sol.X[k] = Xd;
            } else {
                sol.S.push_back(Sk);
            }
        }
        sol.z = xf;
        return sol;
    };

    for (int iter = 0; iter <= opt.max_iterations; ++iter) {
        // residuals
        Vec Ax = Aop(d, X);
        Vec rp = d.b - Ax - d.F * xf;
        auto Ay = Aadj(d, y);
        std::vector<Mat> Rd(nb);
        for (int k = 0; k < nb; ++k) Rd[k] = d.blocks[k].C - Ay[k] - S[k];
        Vec rf = d.cf - d.F.transpose() * y;

        double pobj = 0.0;
        for (int k = 0; k < nb; ++k) pobj += d.blocks[k].C.cwiseProduct(X[k]).sum();
        pobj += d.cf.dot(xf);
        double dobj = d.b.dot(y);
        double mu = inner(X, S) / N;
        double pinf = rp.norm() / (1.0 + d.normb);
        double dinf = std::sqrt(std::pow(fro(Rd), 2) + rf.squaredNorm()) / (1.0 + d.normC + d.cf.norm());
        double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

        sol.iterations = iter;
        sol.objective = dobj;
        sol.primal_objective = pobj;
        sol.duality_gap = std::abs(pobj - dobj);
        sol.relative_gap = relgap;
        sol.primal_infeasibility = pinf;
        sol.dual_infeasibility = dinf;
        if (opt.verbose)
            std::fprintf(stderr, "%3d pobj %.10e dobj %.10e gap %.2e pinf %.2e dinf %.2e mu %.2e\n", iter, pobj, dobj,
                         relgap, pinf, dinf, mu);

        if (relgap < opt.gap_tol && pinf < opt.feas_tol && dinf < opt.feas_tol) return finish(SdpStatus::Optimal);

        double score = std::max({relgap, pinf, dinf});
        if (score < 0.999 * best_score) {
            best_score = score;
            best.X = X;
            best.y = y;
            best.xf = xf;
            best.metrics = sol;
            stall = 0;
        } else if (++stall > 8) {
            break;
        }

        // rays
        if (dobj > 1e8 * (1.0 + d.normC) && dinf * (1.0 + d.normC) / dobj < 1e-6 &&
            rf.norm() / dobj < 1e-6)
            return finish(SdpStatus::Unbounded);
        if (-pobj > 1e8 * (1.0 + d.normb) && (Ax + d.F * xf).norm() / -pobj < 1e-6)
            return finish(SdpStatus::Infeasible);

        if (iter == opt.max_iterations) break;

        // scaling
        bool ok = true;
        for (int k = 0; k < nb && ok; ++k)
            if (d.blocks[k].kind == BlockKind::Psd) ok = nt_scaling(X[k], S[k], sc[k]);
        if (!ok) break;

        // Schur complement
        Mat M = Mat::Zero(m, m);
        for (int k = 0; k < nb; ++k) {
            const Blk& b = d.blocks[k];
            const int nv = static_cast<int>(b.var.size());
            if (b.kind == BlockKind::Diagonal) {
                Vec w = X[k].col(0).cwiseQuotient(S[k].col(0));
                for (int l = 0; l < nv; ++l)
                    for (int q = l; q < nv; ++q) {
                        // merge two sparse diagonals
                        double s = 0.0;
                        const auto& a = b.A[l];
                        const auto& c = b.A[q];
                        std::size_t i = 0, j = 0;
                        while (i < a.size() && j < c.size()) {
                            if (a[i].row < c[j].row) ++i;
                            else if (a[i].row > c[j].row) ++j;
                            else {
                                s += a[i].value * c[j].value * w(a[i].row);
                                ++i;
                                ++j;
                            }
                        }
                        if (s != 0.0) {
                            M(b.var[l], b.var[q]) += s;
                            if (l != q) M(b.var[q], b.var[l]) += s;
                        }
                    }
                continue;
            }
            const Mat& W = sc[k].W;
            Mat B(b.n, b.n);
            for (int q = 0; q < nv; ++q) {
                B.setZero();
                for (const auto& e : b.A[q]) {
                    if (e.row == e.col) {
                        B.noalias() += e.value * W.col(e.row) * W.row(e.row);
                    } else {
                        B.noalias() += e.value * W.col(e.row) * W.row(e.col);
                        B.noalias() += e.value * W.col(e.col) * W.row(e.row);
                    }
                }
                for (int l = 0; l <= q; ++l) {
                    double s = entry_inner(b.A[l], B, false);
                    M(b.var[l], b.var[q]) += s;
                    if (l != q) M(b.var[q], b.var[l]) += s;
                }
            }
        }

        Eigen::LLT<Mat> llt(M);
        bool llt_ok = llt.info() == Eigen::Success;
        Eigen::LDLT<Mat> ldlt;
        if (!llt_ok) {
            Mat Mr = M;
            Mr.diagonal().array() += 1e-12 * (1.0 + M.diagonal().cwiseAbs().maxCoeff());
            ldlt.compute(Mr);
            if (ldlt.info() != Eigen::Success) break;
        }
        auto msolve = [&](const Mat& rhs) -> Mat { return llt_ok ? Mat(llt.solve(rhs)) : Mat(ldlt.solve(rhs)); };
        Mat MinvF;
        Eigen::FullPivLU<Mat> Klu;
        if (nf) {
            MinvF = msolve(d.F);
            Klu.compute(d.F.transpose() * MinvF);
        }

        // direction for a given complementarity right-hand side Rc
        auto direction = [&](const std::vector<Mat>& Rc, Vec& dy, Vec& dxf, std::vector<Mat>& dX,
                             std::vector<Mat>& dS) {
            std::vector<Mat> T(nb);
            for (int k = 0; k < nb; ++k) {
                if (d.blocks[k].kind == BlockKind::Psd) T[k] = Rc[k] - sc[k].W * Rd[k] * sc[k].W;
                else T[k] = Rc[k] - X[k].cwiseQuotient(S[k]).cwiseProduct(Rd[k]);
            }
            Vec h = rp - Aop(d, T);
            if (nf) {
                Vec Mh = msolve(h);
                dxf = Klu.solve(d.F.transpose() * Mh - rf);
                dy = Mh - MinvF * dxf;
            } else {
                dy = msolve(h);
                dxf.resize(0);
            }
            auto Ady = Aadj(d, dy);
            dX.resize(nb);
            dS.resize(nb);
            for (int k = 0; k < nb; ++k) {
                dS[k] = Rd[k] - Ady[k];
                if (d.blocks[k].kind == BlockKind::Psd) {
                    dX[k] = Rc[k] - sc[k].W * dS[k] * sc[k].W;
                    dX[k] = 0.5 * (dX[k] + dX[k].transpose());
                } else {
                    dX[k] = Rc[k] - X[k].cwiseQuotient(S[k]).cwiseProduct(dS[k]);
                }
            }
        };
        auto steps = [&](const std::vector<Mat>& dX, const std::vector<Mat>& dS, double& ap, double& ad) {
            ap = ad = std::numeric_limits<double>::infinity();
            for (int k = 0; k < nb; ++k) {
                if (d.blocks[k].kind == BlockKind::Psd) {
                    ap = std::min(ap, max_step_psd(sc[k].LX, dX[k]));
                    ad = std::min(ad, max_step_psd(sc[k].LS, dS[k]));
                } else {
                    ap = std::min(ap, max_step_diag(X[k], dX[k]));
                    ad = std::min(ad, max_step_diag(S[k], dS[k]));
                }
            }
        };

        // predictor
        std::vector<Mat> Rc(nb);
        for (int k = 0; k < nb; ++k) Rc[k] = -X[k];
        Vec dy, dxf;
        std::vector<Mat> dX, dS;
        direction(Rc, dy, dxf, dX, dS);
        double ap, ad;
        steps(dX, dS, ap, ad);
        ap = std::min(1.0, ap);
        ad = std::min(1.0, ad);
        double mu_aff = 0.0;
        for (int k = 0; k < nb; ++k) mu_aff += (X[k] + ap * dX[k]).cwiseProduct(S[k] + ad * dS[k]).sum();
        mu_aff /= N;
        double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

        // corrector
        for (int k = 0; k < nb; ++k) {
            const Blk& b = d.blocks[k];
            if (b.kind == BlockKind::Diagonal) {
                Rc[k] = (Mat::Constant(b.n, 1, sigma * mu) - X[k].cwiseProduct(S[k]) - dX[k].cwiseProduct(dS[k]))
                            .cwiseQuotient(S[k]);
                continue;
            }
            const Scaling& s = sc[k];
            Mat dXs = s.Ginv * dX[k] * s.Ginv.transpose();
            Mat dSs = s.G.transpose() * dS[k] * s.G;
            Mat P = dXs * dSs;
            Mat R = -(P + P.transpose());
            for (int i = 0; i < b.n; ++i) R(i, i) += 2.0 * sigma * mu - 2.0 * s.lambda(i) * s.lambda(i);
            for (int i = 0; i < b.n; ++i)
                for (int j = 0; j < b.n; ++j) R(i, j) /= s.lambda(i) + s.lambda(j);
            Rc[k] = s.G * R * s.G.transpose();
            Rc[k] = 0.5 * (Rc[k] + Rc[k].transpose());
        }
        direction(Rc, dy, dxf, dX, dS);
        steps(dX, dS, ap, ad);
        double tau = opt.step_fraction;
        ap = std::min(1.0, tau * ap);
        ad = std::min(1.0, tau * ad);

        for (int k = 0; k < nb; ++k) {
            X[k] += ap * dX[k];
            S[k] += ad * dS[k];
            if (d.blocks[k].kind == BlockKind::Psd) {
                X[k] = 0.5 * (X[k] + X[k].transpose());
                S[k] = 0.5 * (S[k] + S[k].transpose());
            }
        }
        y += ad * dy;
        if (nf) xf += ap * dxf;

        if (std::max(ap, ad) < 1e-10) break;
    }

    // out of iterations or numerically stuck: fall back to the best iterate
    const int total = sol.iterations;
    if (best.y.size() == m) {
        X = best.X;
        y = best.y;
        xf = best.xf;
        sol = best.metrics;
    }
    if (sol.relative_gap < 1e-6 && sol.primal_infeasibility < 1e-7 && sol.dual_infeasibility < 1e-7) {
        sol.reduced_accuracy = true;
        sol.iterations = total;
        return finish(SdpStatus::Optimal);
    }
    sol.iterations = total;
    return finish(total >= opt.max_iterations ? SdpStatus::MaxIterations : SdpStatus::NumericalFailure);
}

}  // namespace bellscope
