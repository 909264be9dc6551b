#include "bellscope/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bellscope {

Scenario::Scenario(std::vector<int> outputs_a, std::vector<int> outputs_b)
    : oa_(std::move(outputs_a)), ob_(std::move(outputs_b)) {
    if (oa_.empty() || ob_.empty())
        throw ValidationError("scenario needs at least one input per party");
    for (int o : oa_)
        if (o < 2) throw ValidationError("every setting needs at least two outcomes");
    for (int o : ob_)
        if (o < 2) throw ValidationError("every setting needs at least two outcomes");

    block_.resize(oa_.size() * ob_.size());
    std::size_t off = 0;
    for (std::size_t x = 0; x < oa_.size(); ++x)
        for (std::size_t y = 0; y < ob_.size(); ++y) {
            block_[x * ob_.size() + y] = off;
            off += static_cast<std::size_t>(oa_[x]) * ob_[y];
        }
    full_dim_ = off;

    row_.resize(oa_.size());
    for (std::size_t x = 0; x < oa_.size(); ++x) {
        row_[x] = na_;
        na_ += oa_[x] - 1;
    }
    col_.resize(ob_.size());
    for (std::size_t y = 0; y < ob_.size(); ++y) {
        col_[y] = nb_;
        nb_ += ob_[y] - 1;
    }
}

Scenario Scenario::uniform(int inputs_a, int inputs_b, int outputs) {
    if (inputs_a < 1 || inputs_b < 1) throw ValidationError("scenario needs at least one input per party");
    return Scenario(std::vector<int>(inputs_a, outputs), std::vector<int>(inputs_b, outputs));
}

std::size_t Scenario::num_vertices() const {
    std::size_t n = 1;
    for (int o : oa_) n *= o;
    for (int o : ob_) n *= o;
    return n;
}

std::string Scenario::tag() const {
    std::ostringstream os;
    os << "{[";
    for (std::size_t i = 0; i < oa_.size(); ++i) os << (i ? " " : "") << oa_[i];
    os << "][";
    for (std::size_t i = 0; i < ob_.size(); ++i) os << (i ? " " : "") << ob_[i];
    os << "]}";
    return os.str();
}

std::vector<AffineRow> full_point_map(const Scenario& s) {
    std::vector<AffineRow> rows(s.full_dimension());
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y) {
            const int la = s.outputs_a(x) - 1, lb = s.outputs_b(y) - 1;
            for (int a = 0; a <= la; ++a)
                for (int b = 0; b <= lb; ++b) {
                    AffineRow& r = rows[s.full_index(x, y, a, b)];
                    if (a < la && b < lb) {
                        r.terms.emplace_back(s.cg_joint(x, a, y, b), 1.0);
                    } else if (a < la) {
                        r.terms.emplace_back(s.cg_alice(x, a), 1.0);
                        for (int bb = 0; bb < lb; ++bb) r.terms.emplace_back(s.cg_joint(x, a, y, bb), -1.0);
                    } else if (b < lb) {
                        r.terms.emplace_back(s.cg_bob(y, b), 1.0);
                        for (int aa = 0; aa < la; ++aa) r.terms.emplace_back(s.cg_joint(x, aa, y, b), -1.0);
                    } else {
                        r.constant = 1.0;
                        for (int aa = 0; aa < la; ++aa) r.terms.emplace_back(s.cg_alice(x, aa), -1.0);
                        for (int bb = 0; bb < lb; ++bb) r.terms.emplace_back(s.cg_bob(y, bb), -1.0);
                        for (int aa = 0; aa < la; ++aa)
                            for (int bb = 0; bb < lb; ++bb) r.terms.emplace_back(s.cg_joint(x, aa, y, bb), 1.0);
                    }
                }
        }
    return rows;
}

ProbabilityTable::ProbabilityTable(Scenario s, std::vector<double> entries, double tol)
    : s_(std::move(s)), p_(std::move(entries)) {
    if (p_.size() != s_.full_dimension())
        throw ValidationError("probability table has " + std::to_string(p_.size()) + " entries, expected " +
                              std::to_string(s_.full_dimension()));
    for (int x = 0; x < s_.inputs_a(); ++x)
        for (int y = 0; y < s_.inputs_b(); ++y) {
            double sum = 0.0;
            for (int a = 0; a < s_.outputs_a(x); ++a)
                for (int b = 0; b < s_.outputs_b(y); ++b) {
                    double v = p_[s_.full_index(x, y, a, b)];
                    if (!std::isfinite(v)) throw ValidationError("probability table has a non-finite entry");
                    if (v < -tol)
                        throw ValidationError("negative probability " + std::to_string(v) + " at (x,y,a,b) = (" +
                                              std::to_string(x) + "," + std::to_string(y) + "," +
                                              std::to_string(a) + "," + std::to_string(b) + ")");
                    sum += v;
                }
            if (std::abs(sum - 1.0) > tol)
                throw ValidationError("setting (" + std::to_string(x) + "," + std::to_string(y) +
                                      ") is not normalized: sum = " + std::to_string(sum));
        }
}

ProbabilityTable ProbabilityTable::uniform(const Scenario& s) {
    std::vector<double> p(s.full_dimension());
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y) {
            double v = 1.0 / (s.outputs_a(x) * s.outputs_b(y));
            std::fill_n(p.begin() + s.block_offset(x, y), s.outputs_a(x) * s.outputs_b(y), v);
        }
    return ProbabilityTable(s, std::move(p));
}

ProbabilityTable ProbabilityTable::from_cg(const Scenario& s, const std::vector<double>& g, double tol) {
    if (g.size() != s.cg_dimension())
        throw ValidationError("CG vector has " + std::to_string(g.size()) + " entries, expected " +
                              std::to_string(s.cg_dimension()));
    auto map = full_point_map(s);
    std::vector<double> p(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
        double v = map[i].constant;
        for (auto [k, w] : map[i].terms) v += w * g[k];
        p[i] = v;
    }
    return ProbabilityTable(s, std::move(p), tol);
}

ProbabilityTable ProbabilityTable::deterministic(const Scenario& s, const std::vector<int>& out_a,
                                                 const std::vector<int>& out_b) {
    if (out_a.size() != static_cast<std::size_t>(s.inputs_a()) || out_b.size() != static_cast<std::size_t>(s.inputs_b()))
        throw ValidationError("deterministic strategy has the wrong number of settings");
    std::vector<double> p(s.full_dimension(), 0.0);
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y) {
            if (out_a[x] < 0 || out_a[x] >= s.outputs_a(x) || out_b[y] < 0 || out_b[y] >= s.outputs_b(y))
                throw ValidationError("deterministic outcome out of range");
            p[s.full_index(x, y, out_a[x], out_b[y])] = 1.0;
        }
    return ProbabilityTable(s, std::move(p));
}

double ProbabilityTable::alice_marginal(int x, int y, int a) const {
    double v = 0.0;
    for (int b = 0; b < s_.outputs_b(y); ++b) v += (*this)(x, y, a, b);
    return v;
}

double ProbabilityTable::bob_marginal(int x, int y, int b) const {
    double v = 0.0;
    for (int a = 0; a < s_.outputs_a(x); ++a) v += (*this)(x, y, a, b);
    return v;
}

double ProbabilityTable::alice_marginal(int x, int a) const {
    double v = 0.0;
    for (int y = 0; y < s_.inputs_b(); ++y) v += alice_marginal(x, y, a);
    return v / s_.inputs_b();
}

double ProbabilityTable::bob_marginal(int y, int b) const {
    double v = 0.0;
    for (int x = 0; x < s_.inputs_a(); ++x) v += bob_marginal(x, y, b);
    return v / s_.inputs_a();
}

std::vector<double> ProbabilityTable::cg() const {
    std::vector<double> g(s_.cg_dimension());
    for (int x = 0; x < s_.inputs_a(); ++x)
        for (int a = 0; a + 1 < s_.outputs_a(x); ++a) g[s_.cg_alice(x, a)] = alice_marginal(x, a);
    for (int y = 0; y < s_.inputs_b(); ++y)
        for (int b = 0; b + 1 < s_.outputs_b(y); ++b) {
            g[s_.cg_bob(y, b)] = bob_marginal(y, b);
            for (int x = 0; x < s_.inputs_a(); ++x)
                for (int a = 0; a + 1 < s_.outputs_a(x); ++a) g[s_.cg_joint(x, a, y, b)] = (*this)(x, y, a, b);
        }
    return g;
}

CountsTable::CountsTable(Scenario s, std::vector<std::uint64_t> counts) : s_(std::move(s)), n_(std::move(counts)) {
    if (n_.size() != s_.full_dimension())
        throw ValidationError("counts table has " + std::to_string(n_.size()) + " entries, expected " +
                              std::to_string(s_.full_dimension()));
}

std::uint64_t CountsTable::total(int x, int y) const {
    std::uint64_t t = 0;
    for (int a = 0; a < s_.outputs_a(x); ++a)
        for (int b = 0; b < s_.outputs_b(y); ++b) t += (*this)(x, y, a, b);
    return t;
}

ProbabilityTable frequencies_from_counts(const CountsTable& c) {
    const Scenario& s = c.scenario();
    std::vector<double> p(s.full_dimension());
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y) {
            std::uint64_t t = c.total(x, y);
            if (t == 0)
                throw ValidationError("setting (" + std::to_string(x) + "," + std::to_string(y) + ") has no counts");
            for (int a = 0; a < s.outputs_a(x); ++a)
                for (int b = 0; b < s.outputs_b(y); ++b)
                    p[s.full_index(x, y, a, b)] = static_cast<double>(c(x, y, a, b)) / static_cast<double>(t);
        }
    return ProbabilityTable(s, std::move(p));
}

ProbabilityTable mix_with_white_noise(const ProbabilityTable& p, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("visibility must lie in [0, 1]");
    auto u = ProbabilityTable::uniform(p.scenario());
    std::vector<double> q(p.entries().size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = v * p.entries()[i] + (1.0 - v) * u.entries()[i];
    return ProbabilityTable(p.scenario(), std::move(q));
}

void BellFunctional::validate() const {
    std::size_t n = form == Form::CG ? scenario.cg_dimension() : scenario.full_dimension();
    if (coefficients.size() != n)
        throw ValidationError("functional has " + std::to_string(coefficients.size()) + " coefficients, expected " +
                              std::to_string(n));
    for (double c : coefficients)
        if (!std::isfinite(c)) throw ValidationError("functional has a non-finite coefficient");
}

BellFunctional BellFunctional::negated() const {
    BellFunctional g = *this;
    for (double& c : g.coefficients) c = -c;
    g.offset = -offset;
    g.local_max.reset();
    g.local_min.reset();
    if (local_min) g.local_max = -*local_min;
    if (local_max) g.local_min = -*local_max;
    return g;
}

double evaluate(const BellFunctional& f, const ProbabilityTable& p) {
    f.validate();
    if (f.scenario != p.scenario()) throw ValidationError("functional and table belong to different scenarios");
    const std::vector<double>& v = f.form == Form::CG ? p.cg() : p.entries();
    double s = f.offset;
    for (std::size_t i = 0; i < v.size(); ++i) s += f.coefficients[i] * v[i];
    return s;
}

BellFunctional full_from_cg(const BellFunctional& f) {
    f.validate();
    if (f.form == Form::Full) return f;
    const Scenario& s = f.scenario;
    BellFunctional out = f;
    out.form = Form::Full;
    out.coefficients.assign(s.full_dimension(), 0.0);
    const auto& beta = f.coefficients;
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y)
            for (int a = 0; a + 1 < s.outputs_a(x); ++a)
                for (int b = 0; b + 1 < s.outputs_b(y); ++b)
                    out.coefficients[s.full_index(x, y, a, b)] += beta[s.cg_joint(x, a, y, b)];
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int a = 0; a + 1 < s.outputs_a(x); ++a)
            for (int b = 0; b < s.outputs_b(0); ++b) out.coefficients[s.full_index(x, 0, a, b)] += beta[s.cg_alice(x, a)];
    for (int y = 0; y < s.inputs_b(); ++y)
        for (int b = 0; b + 1 < s.outputs_b(y); ++b)
            for (int a = 0; a < s.outputs_a(0); ++a) out.coefficients[s.full_index(0, y, a, b)] += beta[s.cg_bob(y, b)];
    return out;
}

BellFunctional cg_from_full(const BellFunctional& f) {
    f.validate();
    if (f.form == Form::CG) return f;
    BellFunctional out = f;
    out.form = Form::CG;
    out.coefficients.assign(f.scenario.cg_dimension(), 0.0);
    auto map = full_point_map(f.scenario);
    for (std::size_t i = 0; i < map.size(); ++i) {
        double c = f.coefficients[i];
        if (c == 0.0) continue;
        out.offset += c * map[i].constant;
        for (auto [k, w] : map[i].terms) out.coefficients[k] += c * w;
    }
    return out;
}

double SignalingReport::max_z() const {
    double z = 0.0;
    for (const auto& d : deltas)
        if (d.sigma > 0.0) z = std::max(z, d.delta / d.sigma);
    return z;
}

std::size_t SignalingReport::count_outside(double k_sigma) const {
    std::size_t n = 0;
    for (const auto& d : deltas)
        if (d.sigma > 0.0 ? d.delta > k_sigma * d.sigma : d.delta > 1e-12) ++n;
    return n;
}

bool SignalingReport::flags(double k_sigma) const {
    if (!has_sigma) return max_delta > 1e-9;
    double band = bonferroni_band(k_sigma, deltas.size());
    for (const auto& d : deltas)
        if (d.sigma > 0.0 ? d.delta > band * d.sigma : d.delta > 1e-12) return true;
    return false;
}

namespace {

template <class Marg, class Var>
SignalingReport collect(const Scenario& s, Marg marg, Var var, bool with_sigma) {
    SignalingReport r;
    r.has_sigma = with_sigma;
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int a = 0; a < s.outputs_a(x); ++a)
            for (int y1 = 0; y1 < s.inputs_b(); ++y1)
                for (int y2 = y1 + 1; y2 < s.inputs_b(); ++y2) {
                    SignalingDelta d{Party::Alice, x, a, y1, y2};
                    d.delta = std::abs(marg(Party::Alice, x, y1, a) - marg(Party::Alice, x, y2, a));
                    if (with_sigma) d.sigma = var(Party::Alice, x, a, y1, y2);
                    r.deltas.push_back(d);
                }
    for (int y = 0; y < s.inputs_b(); ++y)
        for (int b = 0; b < s.outputs_b(y); ++b)
            for (int x1 = 0; x1 < s.inputs_a(); ++x1)
                for (int x2 = x1 + 1; x2 < s.inputs_a(); ++x2) {
                    SignalingDelta d{Party::Bob, y, b, x1, x2};
                    d.delta = std::abs(marg(Party::Bob, y, x1, b) - marg(Party::Bob, y, x2, b));
                    if (with_sigma) d.sigma = var(Party::Bob, y, b, x1, x2);
                    r.deltas.push_back(d);
                }
    for (const auto& d : r.deltas) r.max_delta = std::max(r.max_delta, d.delta);
    return r;
}

}  // namespace

SignalingReport signaling_deltas(const ProbabilityTable& p) {
    auto marg = [&](Party who, int s, int o, int k) {
        return who == Party::Alice ? p.alice_marginal(s, o, k) : p.bob_marginal(o, s, k);
    };
    return collect(p.scenario(), marg, [](Party, int, int, int, int) { return 0.0; }, false);
}

SignalingReport signaling_deltas(const CountsTable& c) {
    const Scenario& s = c.scenario();
    // marginal counts n(k | setting, other)
    auto mcount = [&](Party who, int set, int other, int k) {
        std::uint64_t n = 0;
        if (who == Party::Alice)
            for (int b = 0; b < s.outputs_b(other); ++b) n += c(set, other, k, b);
        else
            for (int a = 0; a < s.outputs_a(other); ++a) n += c(other, set, a, k);
        return n;
    };
    auto total = [&](Party who, int set, int other) {
        return who == Party::Alice ? c.total(set, other) : c.total(other, set);
    };
    auto marg = [&](Party who, int set, int other, int k) {
        std::uint64_t t = total(who, set, other);
        return t ? static_cast<double>(mcount(who, set, other, k)) / t : 0.0;
    };
    // pooled two-proportion standard error
    auto sig = [&](Party who, int set, int k, int o1, int o2) {
        double n1 = total(who, set, o1), n2 = total(who, set, o2);
        if (n1 == 0 || n2 == 0) return 0.0;
        double pbar = (mcount(who, set, o1, k) + mcount(who, set, o2, k)) / (n1 + n2);
        return std::sqrt(pbar * (1.0 - pbar) * (1.0 / n1 + 1.0 / n2));
    };
    return collect(s, marg, sig, true);
}

bool check_nonsignaling(const ProbabilityTable& p, double tol) { return signaling_deltas(p).max_delta <= tol; }

double bonferroni_band(double k_sigma, std::size_t m) {
    if (m == 0) return k_sigma;
    double alpha = std::erfc(k_sigma / std::sqrt(2.0)) / static_cast<double>(m);
    double lo = 0.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (std::erfc(mid / std::sqrt(2.0)) > alpha) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace bellscope
