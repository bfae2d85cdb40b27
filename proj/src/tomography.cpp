#include "tbe/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tbe/rng.hpp"

namespace tbe {

namespace {

constexpr int kNP = 16;
using Params = std::array<double, 16>;

// lower-triangle off-diagonal order used by the T parametrization
constexpr int kOffRow[6] = {1, 2, 2, 3, 3, 3};
constexpr int kOffCol[6] = {0, 0, 1, 0, 1, 2};

Mat4 build_t_matrix(const Params& t) {
    Mat4 m;
    for (int k = 0; k < 4; ++k) m(k, k) = t[size_t(k)];
    for (int k = 0; k < 6; ++k)
        m(kOffRow[k], kOffCol[k]) = Cplx(t[size_t(4 + 2 * k)], t[size_t(5 + 2 * k)]);
    return m;
}

bool canonical_less(const ProjectionRecord& a, const ProjectionRecord& b) {
    if (a.setting != b.setting) return int(a.setting) < int(b.setting);
    if (a.cell_ta != b.cell_ta) return a.cell_ta < b.cell_ta;
    return a.cell_tb < b.cell_tb;
}

}  // namespace

Mat4 params_to_unnormalized(const Params& t) {
    Mat4 m = build_t_matrix(t);
    return adjoint(m) * m;
}

Mat4 params_to_rho(const Params& t) {
    Mat4 m = params_to_unnormalized(t);
    double tr = trace(m).real();
    if (!(tr > 0)) throw std::invalid_argument("params_to_rho: zero-trace parameter point");
    return (1.0 / tr) * m;
}

std::array<double, 16> rho_to_params(const Mat4& psd, double scale) {
    // M = T^dagger T with T lower triangular means M = U U^dagger with
    // U = T^dagger upper triangular; reversing the basis order turns that into
    // a plain lower Cholesky.
    Mat4 b;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            b(i, j) = 0.5 * (psd(3 - i, 3 - j) + std::conj(psd(3 - j, 3 - i))) * scale;
    Mat4 L;
    for (int k = 0; k < 4; ++k) {
        double d = b(k, k).real();
        for (int j = 0; j < k; ++j) d -= std::norm(L(k, j));
        double lkk = std::sqrt(std::max(d, 0.0));
        L(k, k) = lkk;
        for (int i = k + 1; i < 4; ++i) {
            if (lkk < 1e-154) {
                L(i, k) = 0;
                continue;
            }
            Cplx v = b(i, k);
            for (int j = 0; j < k; ++j) v -= L(i, j) * std::conj(L(k, j));
            L(i, k) = v / lkk;
        }
    }
    // T(r,c) = conj(L(3-c, 3-r))
    Params t{};
    for (int k = 0; k < 4; ++k) t[size_t(k)] = L(3 - k, 3 - k).real();
    for (int k = 0; k < 6; ++k) {
        Cplx v = std::conj(L(3 - kOffCol[k], 3 - kOffRow[k]));
        t[size_t(4 + 2 * k)] = v.real();
        t[size_t(5 + 2 * k)] = v.imag();
    }
    return t;
}

namespace {

// record view with real-valued counts so the optimizer can work on
// scale-normalized data
struct CostRec {
    Ket4 projector;
    double weight;
    double count;
};

double cost_core(const Params& t, const std::vector<CostRec>& rec, bool poisson, double eps) {
    Mat4 m = params_to_unnormalized(t);
    double cost = 0;
    for (const auto& r : rec) {
        double pred = r.weight * expval(m, r.projector).real();
        if (poisson) {
            cost += pred - r.count * std::log(std::max(pred, eps));
        } else if (r.count <= 0.0) {
            // exact pred^2/(2 pred) limit: finite without the floor, and
            // 1-homogeneous in the count scale so zero records cannot break
            // the rescale equivariance of the reconstruction
            cost += 0.5 * std::max(pred, 0.0);
        } else {
            double d = pred - r.count;
            cost += d * d / (2.0 * std::max(pred, eps));
        }
    }
    return cost;
}

}  // namespace

double mle_cost(const Params& t, const ProjectionRecords& records, const MleOptions& opts) {
    std::vector<CostRec> rec;
    rec.reserve(records.size());
    for (const auto& r : records) rec.push_back({r.projector, r.weight, double(r.count)});
    return cost_core(t, rec, opts.poisson_nll, opts.epsilon);
}

namespace {

// ---- linear inversion ----

std::array<Mat4, 16> hermitian_basis() {
    std::array<Mat4, 16> b{};
    int idx = 0;
    for (int k = 0; k < 4; ++k) {
        b[size_t(idx)](k, k) = 1;
        ++idx;
    }
    for (int r = 0; r < 4; ++r)
        for (int c = r + 1; c < 4; ++c) {
            b[size_t(idx)](r, c) = 1;
            b[size_t(idx)](c, r) = 1;
            ++idx;
            b[size_t(idx)](r, c) = Cplx(0, 1);
            b[size_t(idx)](c, r) = Cplx(0, -1);
            ++idx;
        }
    return b;
}

// cyclic Jacobi on a real symmetric n x n matrix (row-major); a ends up
// diagonal, columns of v are the eigenvectors
void jacobi_sym(int n, std::vector<double>& a, std::vector<double>& v) {
    v.assign(size_t(n) * size_t(n), 0.0);
    for (int i = 0; i < n; ++i) v[size_t(i) * size_t(n) + size_t(i)] = 1.0;
    auto A = [&](int r, int c) -> double& { return a[size_t(r) * size_t(n) + size_t(c)]; };
    auto V = [&](int r, int c) -> double& { return v[size_t(r) * size_t(n) + size_t(c)]; };
    double scale = 0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(A(i, i)));
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off < 1e-28 * (1 + scale * scale)) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                double apq = A(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double tau = (A(q, q) - A(p, p)) / (2 * apq);
                double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1 + tau * tau));
                double c = 1 / std::sqrt(1 + t * t), s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
    }
}

}  // namespace

LinearResult linear_reconstruct(const ProjectionRecords& records) {
    auto basis = hermitian_basis();
    // normal equations over the 16 real coefficients of X in the Hermitian
    // basis; minimum-norm solve via eigendecomposition keeps rank-deficient
    // record sets usable
    std::vector<double> ata(256, 0.0);
    std::array<double, 16> atb{};
    for (const auto& rec : records) {
        double row[16];
        for (int c = 0; c < 16; ++c)
            row[c] = rec.weight * expval(basis[size_t(c)], rec.projector).real();
        for (int i = 0; i < 16; ++i) {
            atb[size_t(i)] += row[i] * double(rec.count);
            for (int j = 0; j < 16; ++j) ata[size_t(i) * 16 + size_t(j)] += row[i] * row[j];
        }
    }
    std::vector<double> vec;
    jacobi_sym(16, ata, vec);
    double lmax = 0;
    for (int i = 0; i < 16; ++i) lmax = std::max(lmax, ata[size_t(i) * 16 + size_t(i)]);

    LinearResult out;
    std::array<double, 16> x{};
    for (int i = 0; i < 16; ++i) {
        double lam = ata[size_t(i) * 16 + size_t(i)];
        if (lam > 1e-10 * lmax && lam > 0) {
            ++out.rank;
            double proj = 0;
            for (int k = 0; k < 16; ++k) proj += vec[size_t(k) * 16 + size_t(i)] * atb[size_t(k)];
            proj /= lam;
            for (int k = 0; k < 16; ++k) x[size_t(k)] += proj * vec[size_t(k) * 16 + size_t(i)];
        }
    }
    Mat4 X;
    for (int c = 0; c < 16; ++c) X = X + x[size_t(c)] * basis[size_t(c)];
    X = 0.5 * (X + adjoint(X));
    double tr = trace(X).real();
    out.scale = tr;
    // a deficient projector set or an unnormalizable solution both warn
    out.rank_warning = (out.rank < 16) || !(tr > 0);
    out.rho = (tr > 0) ? (1.0 / tr) * X : X;
    return out;
}

namespace {

// ---- BFGS with central-difference gradients ----

struct BfgsOut {
    Params t{};
    double cost = 0;
    int iterations = 0;
    bool converged = false;
};

void gradient(const Params& t, const std::vector<CostRec>& rec, bool poisson, double eps,
              Params& g) {
    Params tp = t;
    for (int i = 0; i < kNP; ++i) {
        double h = 6e-6 * (1.0 + std::abs(t[size_t(i)]));
        tp[size_t(i)] = t[size_t(i)] + h;
        double fp = cost_core(tp, rec, poisson, eps);
        tp[size_t(i)] = t[size_t(i)] - h;
        double fm = cost_core(tp, rec, poisson, eps);
        tp[size_t(i)] = t[size_t(i)];
        g[size_t(i)] = (fp - fm) / (2 * h);
    }
}

BfgsOut bfgs_minimize(Params t, const std::vector<CostRec>& rec, bool poisson, double eps,
                      int max_iterations) {
    BfgsOut out;
    std::array<double, 256> H{};
    for (int i = 0; i < kNP; ++i) H[size_t(i) * 16 + size_t(i)] = 1.0;
    double f = cost_core(t, rec, poisson, eps);
    Params g;
    gradient(t, rec, poisson, eps, g);
    int stall = 0;
    int it = 0;
    for (; it < max_iterations; ++it) {
        Params d{};
        for (int i = 0; i < kNP; ++i) {
            double s = 0;
            for (int j = 0; j < kNP; ++j) s += H[size_t(i) * 16 + size_t(j)] * g[size_t(j)];
            d[size_t(i)] = -s;
        }
        double gd = 0;
        for (int i = 0; i < kNP; ++i) gd += g[size_t(i)] * d[size_t(i)];
        if (!(gd < 0)) {
            // curvature lost; restart from steepest descent
            H.fill(0.0);
            for (int i = 0; i < kNP; ++i) H[size_t(i) * 16 + size_t(i)] = 1.0;
            gd = 0;
            for (int i = 0; i < kNP; ++i) {
                d[size_t(i)] = -g[size_t(i)];
                gd -= g[size_t(i)] * g[size_t(i)];
            }
            if (!(gd < 0)) {
                out.converged = true;  // exactly zero gradient
                break;
            }
        }
        double alpha = 1.0, fn = f;
        Params tn = t;
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (int i = 0; i < kNP; ++i) tn[size_t(i)] = t[size_t(i)] + alpha * d[size_t(i)];
            fn = cost_core(tn, rec, poisson, eps);
            if (fn <= f + 1e-4 * alpha * gd) {
                ok = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!ok) {
            out.converged = stall > 0;
            break;
        }
        Params gn;
        gradient(tn, rec, poisson, eps, gn);
        Params s, y;
        double sy = 0, snorm = 0, ynorm = 0;
        for (int i = 0; i < kNP; ++i) {
            s[size_t(i)] = tn[size_t(i)] - t[size_t(i)];
            y[size_t(i)] = gn[size_t(i)] - g[size_t(i)];
            sy += s[size_t(i)] * y[size_t(i)];
            snorm += s[size_t(i)] * s[size_t(i)];
            ynorm += y[size_t(i)] * y[size_t(i)];
        }
        if (sy > 1e-12 * std::sqrt(snorm * ynorm)) {
            // H' = H + (sy + yHy)/sy^2 ss^T - (Hys^T + sy^TH)/sy
            Params hy{};
            double yhy = 0;
            for (int i = 0; i < kNP; ++i) {
                double acc = 0;
                for (int j = 0; j < kNP; ++j) acc += H[size_t(i) * 16 + size_t(j)] * y[size_t(j)];
                hy[size_t(i)] = acc;
                yhy += y[size_t(i)] * acc;
            }
            double c1 = (sy + yhy) / (sy * sy);
            for (int i = 0; i < kNP; ++i)
                for (int j = 0; j < kNP; ++j)
                    H[size_t(i) * 16 + size_t(j)] +=
                        c1 * s[size_t(i)] * s[size_t(j)] -
                        (hy[size_t(i)] * s[size_t(j)] + s[size_t(i)] * hy[size_t(j)]) / sy;
        }
        double drop = f - fn;
        t = tn;
        g = gn;
        f = fn;
        if (drop <= 1e-10 * (1.0 + std::abs(f)))
            ++stall;
        else
            stall = 0;
        if (stall >= 3 || f < 1e-14) {
            ++it;
            out.converged = true;
            break;
        }
    }
    out.t = t;
    out.cost = f;
    out.iterations = it;
    return out;
}

std::vector<Params> build_starts(const std::vector<CostRec>& rec, const MleOptions& o,
                                 double hint_factor, const LinearResult& lin) {
    double sum_n = 0, sum_w = 0;
    for (const auto& r : rec) {
        sum_n += r.count;
        sum_w += r.weight;
    }
    double count_scale = sum_w > 0 ? sum_n / sum_w : 1.0;
    std::vector<Params> starts;
    int want = std::max(1, o.starts);
    if (o.use_start_hint) {
        Params h = o.start_hint;
        for (double& x : h) x *= hint_factor;
        starts.push_back(h);
    } else {
        Params ident{};
        double c = std::max(count_scale, 1e-12);
        for (int k = 0; k < 4; ++k) ident[size_t(k)] = std::sqrt(c);
        starts.push_back(ident);
        if (lin.scale > 0) {
            auto eg = eig_hermitian_full(lin.rho, 1e-6);
            if (eg.values[0] > 0) {
                // clamp negative eigenvalues, renormalize, refit the scale
                Mat4 psd;
                for (int k = 0; k < 4; ++k) {
                    double lam = std::max(eg.values[size_t(k)], eg.values[0] * 1e-6);
                    Ket4 vk;
                    for (int r = 0; r < 4; ++r) vk.a[size_t(r)] = eg.vectors(r, k);
                    psd = psd + lam * Mat4::outer(vk);
                }
                psd = (1.0 / trace(psd).real()) * psd;
                double pred = 0, tot = 0;
                for (const auto& r : rec) {
                    pred += r.weight * expval(psd, r.projector).real();
                    tot += double(r.count);
                }
                if (pred > 0 && tot > 0) starts.push_back(rho_to_params(psd, tot / pred));
            }
        }
    }
    while (int(starts.size()) < want) {
        auto rng = make_stream(o.seed, 1000 + uint64_t(starts.size()));
        std::normal_distribution<double> nd(0.0, std::sqrt(std::max(count_scale, 1.0)));
        Params p;
        for (int i = 0; i < kNP; ++i) p[size_t(i)] = nd(rng);
        starts.push_back(p);
    }
    return starts;
}

}  // namespace

TomographyResult mle_reconstruct(const ProjectionRecords& records, const MleOptions& opts) {
    if (records.empty()) throw std::invalid_argument("mle_reconstruct: no records");
    ProjectionRecords rec = records;
    std::stable_sort(rec.begin(), rec.end(), canonical_less);
    double sum_n = 0, sum_w = 0;
    for (const auto& r : rec) {
        if (r.count < 0) throw std::invalid_argument("mle_reconstruct: negative count");
        if (!(r.weight > 0)) throw std::invalid_argument("mle_reconstruct: nonpositive weight");
        sum_n += double(r.count);
        sum_w += r.weight;
    }
    if (sum_n <= 0) throw std::invalid_argument("mle_reconstruct: all counts are zero");

    auto lin = linear_reconstruct(rec);

    // optimize at a normalized count scale: rescaling every count by k maps
    // the Gaussian cost to cost_raw(sqrt(s) t; eps) = s * cost_norm(t; eps/s)
    // and shifts the Poisson NLL by a t-independent constant, so the returned
    // state is independent of the absolute scale and the optimizer always
    // runs on O(1) numbers
    const double scale = sum_n / sum_w;
    const double root_scale = std::sqrt(scale);
    std::vector<CostRec> crec;
    crec.reserve(rec.size());
    for (const auto& r : rec) crec.push_back({r.projector, r.weight, double(r.count) / scale});
    const double eps = opts.epsilon / scale;

    auto starts = build_starts(crec, opts, 1.0 / root_scale, lin);
    BfgsOut best;
    bool have = false;
    for (const auto& s0 : starts) {
        auto r = bfgs_minimize(s0, crec, opts.poisson_nll, eps, opts.max_iterations);
        if (!have || r.cost < best.cost) {
            best = r;
            have = true;
        }
    }

    TomographyResult out;
    for (int i = 0; i < kNP; ++i) out.t_params[size_t(i)] = root_scale * best.t[size_t(i)];
    Mat4 m = params_to_unnormalized(best.t);
    double tr = trace(m).real();
    if (!(tr > 0)) throw std::runtime_error("mle_reconstruct: optimizer collapsed to zero trace");
    out.rho_mle = DensityMatrix::from((1.0 / tr) * m, 1e-8, 1e-8, -1e-8);
    out.rho_linear = lin.rho;
    out.linear_rank_warning = lin.rank_warning;
    out.metrics = compute_metrics(out.rho_mle);
    out.concurrence_iv = {out.metrics.concurrence, out.metrics.concurrence};
    out.fidelity_iv = {out.metrics.fidelity_phi_plus, out.metrics.fidelity_phi_plus};
    out.chsh_iv = {out.metrics.chsh_s, out.metrics.chsh_s};
    out.purity_iv = {out.metrics.purity, out.metrics.purity};
    out.seed = opts.seed;
    out.optimizer.iterations = best.iterations;
    out.optimizer.final_cost = mle_cost(out.t_params, rec, opts);
    out.optimizer.converged = best.converged;
    return out;
}

TomographyResult monte_carlo(const ProjectionRecords& records, int n_samples, uint64_t seed,
                             const MleOptions& opts, bool parallel, bool keep_samples) {
    if (n_samples <= 0) throw std::invalid_argument("monte_carlo: n_samples must be positive");
    TomographyResult base = mle_reconstruct(records, opts);

    ProjectionRecords rec = records;
    std::stable_sort(rec.begin(), rec.end(), canonical_less);

    std::vector<double> mc_c(size_t(n_samples), 0.0), mc_f(size_t(n_samples), 0.0);
    std::vector<double> mc_s(size_t(n_samples), 0.0), mc_p(size_t(n_samples), 0.0);
    std::vector<std::string> errs(static_cast<size_t>(n_samples));

    auto run_sample = [&](int i) {
        try {
            auto rng = make_stream(seed, uint64_t(i));
            ProjectionRecords rs = rec;
            for (auto& r : rs) {
                if (r.count > 0) {
                    std::poisson_distribution<int64_t> pd(double(r.count));
                    r.count = pd(rng);
                }
            }
            MleOptions o2 = opts;
            o2.use_start_hint = true;
            o2.start_hint = base.t_params;
            o2.starts = 2;
            o2.seed = splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (uint64_t(i) + 1)));
            auto res = mle_reconstruct(rs, o2);
            mc_c[size_t(i)] = res.metrics.concurrence;
            mc_f[size_t(i)] = res.metrics.fidelity_phi_plus;
            mc_s[size_t(i)] = res.metrics.chsh_s;
            mc_p[size_t(i)] = res.metrics.purity;
        } catch (const std::exception& e) {
            errs[size_t(i)] = e.what();
        }
    };

    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n_samples; ++i) run_sample(i);
    } else {
        for (int i = 0; i < n_samples; ++i) run_sample(i);
    }
    for (int i = 0; i < n_samples; ++i)
        if (!errs[size_t(i)].empty())
            throw std::runtime_error("monte_carlo: resample " + std::to_string(i) +
                                     " failed: " + errs[size_t(i)]);

    auto central_68 = [](std::vector<double> xs, double point) {
        std::sort(xs.begin(), xs.end());
        auto pct = [&](double q) {
            double idx = q * double(xs.size() - 1);
            size_t lo = size_t(std::floor(idx));
            size_t hi = std::min(lo + 1, xs.size() - 1);
            double fr = idx - double(lo);
            return xs[lo] + fr * (xs[hi] - xs[lo]);
        };
        MetricInterval iv{pct(0.16), pct(0.84)};
        // the interval always contains the point estimate
        iv.lower = std::min(iv.lower, point);
        iv.upper = std::max(iv.upper, point);
        return iv;
    };
    base.concurrence_iv = central_68(mc_c, base.metrics.concurrence);
    base.fidelity_iv = central_68(mc_f, base.metrics.fidelity_phi_plus);
    base.chsh_iv = central_68(mc_s, base.metrics.chsh_s);
    base.purity_iv = central_68(mc_p, base.metrics.purity);
    base.mc_samples = n_samples;
    base.seed = seed;
    if (keep_samples) {
        base.mc_concurrence = std::move(mc_c);
        base.mc_fidelity = std::move(mc_f);
        base.mc_chsh = std::move(mc_s);
        base.mc_purity = std::move(mc_p);
    }
    return base;
}

}  // namespace tbe
