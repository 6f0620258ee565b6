#include "qsq/rio.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "qsq/error.hpp"
#include "qsq/ode.hpp"
#include "qsq/optim.hpp"

namespace qsq {
namespace {

constexpr double kPi = std::numbers::pi;

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double length3(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 scaled(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
Vec3 normalized(const Vec3& a) { return scaled(a, 1.0 / length3(a)); }

double nearest_branch(double angle, double reference) {
    return reference + std::remainder(angle - reference, 2.0 * kPi);
}

// Frame ODE in arc length: r' = t, t' = -r + kappa (r x t), N' = r x t.
using FrameState = std::array<double, 9>;

struct FrameRhs {
    double mx, my;
    void operator()(double, const FrameState& y, FrameState& dy) const {
        const Vec3 r{y[0], y[1], y[2]};
        const Vec3 t{y[3], y[4], y[5]};
        const Vec3 n = cross(r, t);
        const double kappa = mx * r[0] + my * r[1];
        for (int i = 0; i < 3; ++i) {
            dy[i] = t[i];
            dy[3 + i] = -r[i] + kappa * n[i];
            dy[6 + i] = n[i];
        }
    }
};

StepControl frame_tolerance() {
    StepControl c;
    c.rtol = 1e-13;
    c.atol = 1e-15;
    return c;
}

FrameState frame_start() { return {0, 0, 1, 0, 1, 0, 0, 0, 0}; }

FrameState integrate_frame(double mu, double epsilon, double length) {
    FrameRhs rhs{mu * std::cos(epsilon), mu * std::sin(epsilon)};
    Dopri5<9> solver(frame_tolerance());
    FrameState y = frame_start();
    double s = 0.0;
    solver.advance(rhs, s, y, length);
    return y;
}

// Endpoint misfit: r(L) must be the south pole and the transverse moment must vanish.
std::array<double, 4> shooting_residual(double mu, double epsilon, double length) {
    const FrameState y = integrate_frame(mu, epsilon, length);
    return {y[0], y[1], y[6], y[7]};
}

struct ShotResult {
    double mu, epsilon, length, misfit;
    bool converged;
};

ShotResult shoot(double mu, double epsilon, double length) {
    std::array<double, 3> p{mu, epsilon, length};
    auto eval = [](const std::array<double, 3>& q) { return shooting_residual(q[0], q[1], q[2]); };
    auto sq = [](const std::array<double, 4>& r) { return r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]; };
    std::array<double, 4> res = eval(p);
    double cost = sq(res);
    double lambda = 1e-3;
    for (int iter = 0; iter < 80 && std::sqrt(cost) > 1e-13; ++iter) {
        double jac[4][3];
        for (int j = 0; j < 3; ++j) {
            std::array<double, 3> q = p;
            const double h = 1e-7 * std::max(1.0, std::abs(p[j]));
            q[j] += h;
            const auto rq = eval(q);
            for (int i = 0; i < 4; ++i) jac[i][j] = (rq[i] - res[i]) / h;
        }
        double jtj[3][3] = {};
        double jtr[3] = {};
        for (int a = 0; a < 3; ++a) {
            for (int i = 0; i < 4; ++i) jtr[a] += jac[i][a] * res[i];
            for (int b = 0; b < 3; ++b)
                for (int i = 0; i < 4; ++i) jtj[a][b] += jac[i][a] * jac[i][b];
        }
        bool improved = false;
        for (int attempt = 0; attempt < 12 && !improved; ++attempt) {
            double m[3][4];
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) m[a][b] = jtj[a][b] + (a == b ? lambda * (jtj[a][a] + 1e-12) : 0.0);
                m[a][3] = -jtr[a];
            }
            // Gaussian elimination with partial pivoting.
            for (int c = 0; c < 3; ++c) {
                int piv = c;
                for (int r = c + 1; r < 3; ++r)
                    if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
                for (int k = 0; k < 4; ++k) std::swap(m[c][k], m[piv][k]);
                for (int r = c + 1; r < 3; ++r) {
                    const double f = m[r][c] / m[c][c];
                    for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
                }
            }
            double d[3];
            for (int c = 2; c >= 0; --c) {
                double acc = m[c][3];
                for (int k = c + 1; k < 3; ++k) acc -= m[c][k] * d[k];
                d[c] = acc / m[c][c];
            }
            std::array<double, 3> q{p[0] + d[0], p[1] + d[1], p[2] + d[2]};
            if (q[2] <= 0.0 || !std::isfinite(q[0] + q[1] + q[2])) {
                lambda *= 4.0;
                continue;
            }
            const auto rq = eval(q);
            const double cq = sq(rq);
            if (cq < cost) {
                p = q;
                res = rq;
                cost = cq;
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
            } else {
                lambda *= 4.0;
            }
        }
        if (!improved) break;
    }
    const double misfit = std::sqrt(cost);
    return {p[0], p[1], p[2], misfit, misfit < 1e-10};
}

// ---- polygon collocation -------------------------------------------------

struct ArcTerms {
    double psi;
    Vec3 n;  // psi * (a x b) / |a x b|
};

ArcTerms arc_terms(const Vec3& a, const Vec3& b) {
    const Vec3 c = cross(a, b);
    const double s = length3(c);
    const double psi = std::atan2(s, dot(a, b));
    const double q = (s > 0.0) ? psi / s : 1.0;
    return {psi, scaled(c, q)};
}

// d(psi/sin psi)/d psi
double dq_dpsi(double psi) {
    if (psi < 0.05) {
        const double p2 = psi * psi;
        return psi * (1.0 / 3.0 + p2 * (7.0 / 90.0 + p2 * 31.0 / 2520.0));
    }
    const double s = std::sin(psi);
    return (s - psi * std::cos(psi)) / (s * s);
}

class PolygonProblem {
public:
    PolygonProblem(std::size_t points, double spacing_weight) : m_(points), w_(spacing_weight) {}

    std::size_t variables() const { return 3 * (m_ - 2); }

    std::vector<Vec3> vertices(const optim::Vector& x) const {
        std::vector<Vec3> p(m_);
        p.front() = {0, 0, 1};
        p.back() = {0, 0, -1};
        for (std::size_t k = 1; k + 1 < m_; ++k)
            p[k] = normalized({x[3 * (k - 1)], x[3 * (k - 1) + 1], x[3 * (k - 1) + 2]});
        return p;
    }

    optim::Vector pack(const std::vector<Vec3>& p) const {
        optim::Vector x(variables());
        for (std::size_t k = 1; k + 1 < m_; ++k)
            for (int i = 0; i < 3; ++i) x[3 * (k - 1) + i] = p[k][i];
        return x;
    }

    // Length plus spacing penalty w (M-1) sum psi^2.
    double objective(const optim::Vector& x, optim::Vector& grad) const {
        const auto p = vertices(x);
        std::vector<Vec3> gu(m_, Vec3{0, 0, 0});
        double val = 0.0;
        const double pen = w_ * static_cast<double>(m_ - 1);
        for (std::size_t k = 0; k + 1 < m_; ++k) {
            const Vec3& a = p[k];
            const Vec3& b = p[k + 1];
            const double s = length3(cross(a, b));
            const double psi = std::atan2(s, dot(a, b));
            val += psi + pen * psi * psi;
            const double coef = (1.0 + 2.0 * pen * psi) / std::max(s, 1e-300);
            for (int i = 0; i < 3; ++i) {
                gu[k][i] -= coef * b[i];
                gu[k + 1][i] -= coef * a[i];
            }
        }
        chain(x, p, gu, grad);
        return val;
    }

    void constraints(const optim::Vector& x, optim::Vector& c, optim::Vector& jac) const {
        const auto p = vertices(x);
        const std::size_t n = variables();
        std::vector<Vec3> gx(m_, Vec3{0, 0, 0}), gy(m_, Vec3{0, 0, 0});
        c.assign(2, 0.0);
        for (std::size_t k = 0; k + 1 < m_; ++k) {
            const Vec3& a = p[k];
            const Vec3& b = p[k + 1];
            const Vec3 cr = cross(a, b);
            const double s = length3(cr);
            const double psi = std::atan2(s, dot(a, b));
            const double q = (s > 0.0) ? psi / s : 1.0;
            c[0] += q * cr[0];
            c[1] += q * cr[1];
            const double dq = dq_dpsi(psi) / std::max(s, 1e-300);
            // d psi/da = -b/s, d psi/db = -a/s (radial parts are projected out later).
            for (int i = 0; i < 3; ++i) {
                gx[k][i] -= cr[0] * dq * b[i];
                gx[k + 1][i] -= cr[0] * dq * a[i];
                gy[k][i] -= cr[1] * dq * b[i];
                gy[k + 1][i] -= cr[1] * dq * a[i];
            }
            // (a x b)_x = a_y b_z - a_z b_y ; (a x b)_y = a_z b_x - a_x b_z
            gx[k][1] += q * b[2];
            gx[k][2] -= q * b[1];
            gx[k + 1][2] += q * a[1];
            gx[k + 1][1] -= q * a[2];
            gy[k][2] += q * b[0];
            gy[k][0] -= q * b[2];
            gy[k + 1][0] += q * a[2];
            gy[k + 1][2] -= q * a[0];
        }
        jac.assign(2 * n, 0.0);
        optim::Vector row(n);
        chain(x, p, gx, row);
        std::copy(row.begin(), row.end(), jac.begin());
        chain(x, p, gy, row);
        std::copy(row.begin(), row.end(), jac.begin() + static_cast<std::ptrdiff_t>(n));
    }

private:
    // Gradient through u = v / |v|.
    void chain(const optim::Vector& x, const std::vector<Vec3>& p, const std::vector<Vec3>& gu,
               optim::Vector& grad) const {
        grad.assign(variables(), 0.0);
        for (std::size_t k = 1; k + 1 < m_; ++k) {
            const Vec3 v{x[3 * (k - 1)], x[3 * (k - 1) + 1], x[3 * (k - 1) + 2]};
            const double inv = 1.0 / length3(v);
            const double radial = dot(p[k], gu[k]);
            for (int i = 0; i < 3; ++i) grad[3 * (k - 1) + i] = inv * (gu[k][i] - radial * p[k][i]);
        }
    }

    std::size_t m_;
    double w_;
};

std::vector<Vec3> seed_polygon(std::size_t m, double gamma_final) {
    std::vector<Vec3> p(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(m - 1);
        const double th = kPi * u;
        const double g = 0.5 * kPi + u * (gamma_final - 0.5 * kPi);
        p[k] = {std::sin(th) * std::cos(g), std::sin(th) * std::sin(g), std::cos(th)};
    }
    p.front() = {0, 0, 1};
    p.back() = {0, 0, -1};
    return p;
}

std::vector<Vec3> refine_polygon(const std::vector<Vec3>& p, std::size_t m) {
    // Resample at uniform arc length along the great arcs.
    std::vector<double> cum(p.size(), 0.0);
    for (std::size_t k = 1; k < p.size(); ++k) cum[k] = cum[k - 1] + arc_terms(p[k - 1], p[k]).psi;
    std::vector<Vec3> out(m);
    std::size_t j = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double s = cum.back() * static_cast<double>(k) / static_cast<double>(m - 1);
        while (j + 2 < p.size() && cum[j + 1] < s) ++j;
        const double psi = cum[j + 1] - cum[j];
        const double u = std::clamp((s - cum[j]) / psi, 0.0, 1.0);
        const double sp = std::sin(psi);
        out[k] = normalized(
            {(std::sin((1 - u) * psi) * p[j][0] + std::sin(u * psi) * p[j + 1][0]) / sp,
             (std::sin((1 - u) * psi) * p[j][1] + std::sin(u * psi) * p[j + 1][1]) / sp,
             (std::sin((1 - u) * psi) * p[j][2] + std::sin(u * psi) * p[j + 1][2]) / sp});
    }
    out.front() = {0, 0, 1};
    out.back() = {0, 0, -1};
    return out;
}

struct PolygonSolution {
    std::vector<Vec3> points;
    double length;
    double violation;
};

PolygonSolution solve_polygon(std::size_t m, double gamma_seed) {
    // Coarse-to-fine continuation keeps the inner problems well conditioned.
    std::vector<std::size_t> levels;
    for (std::size_t k = m; k > 48; k = k / 2 + 1) levels.push_back(k);
    if (levels.empty() || levels.back() != std::min<std::size_t>(m, 48)) levels.push_back(std::min<std::size_t>(m, 48));
    std::reverse(levels.begin(), levels.end());

    std::vector<Vec3> pts = seed_polygon(levels.front(), gamma_seed);
    PolygonSolution sol{};
    for (std::size_t level : levels) {
        if (pts.size() != level) pts = refine_polygon(pts, level);
        PolygonProblem prob(level, 0.05);
        optim::AugLagOptions opt;
        opt.constraints = 2;
        opt.constraint_tol = 1e-11;
        opt.inner.max_iterations = 4000;
        opt.inner.grad_tol = 1e-10;
        const auto res = optim::augmented_lagrangian(
            [&](const optim::Vector& x, optim::Vector& g) { return prob.objective(x, g); },
            [&](const optim::Vector& x, optim::Vector& c, optim::Vector& j) { prob.constraints(x, c, j); },
            prob.pack(pts), opt);
        pts = prob.vertices(res.inner.x);
        sol.violation = res.max_violation;
    }
    sol.points = pts;
    sol.length = polygon_length(pts);
    return sol;
}

// Rotates about z so the initial heading has azimuth pi/2 and mirrors so the
// azimuth increases along the path.
void fix_gauge(std::vector<Vec3>& p) {
    const double a0 = std::atan2(p[1][1], p[1][0]);
    const double rot = 0.5 * kPi - a0;
    const double c = std::cos(rot), s = std::sin(rot);
    for (auto& v : p) v = {c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]};
    double sweep = 0.0;
    for (std::size_t k = 2; k + 1 < p.size(); ++k)
        sweep += std::remainder(std::atan2(p[k][1], p[k][0]) - std::atan2(p[k - 1][1], p[k - 1][0]), 2.0 * kPi);
    if (sweep < 0.0)
        for (auto& v : p) v[0] = -v[0];
}

// Least-squares fit of the discrete geodesic curvature to kappa = mx x + my y.
std::pair<double, double> fit_curvature_law(const std::vector<Vec3>& p) {
    double sxx = 0, sxy = 0, syy = 0, sxk = 0, syk = 0;
    for (std::size_t k = 1; k + 1 < p.size(); ++k) {
        const Vec3& a = p[k - 1];
        const Vec3& b = p[k];
        const Vec3& c = p[k + 1];
        const Vec3 tin = normalized(cross(cross(a, b), b));
        const Vec3 tout = normalized(cross(cross(b, c), b));
        const double turn = std::atan2(dot(cross(tin, tout), b), dot(tin, tout));
        const double ds = 0.5 * (arc_terms(a, b).psi + arc_terms(b, c).psi);
        const double kappa = turn / ds;
        sxx += b[0] * b[0];
        sxy += b[0] * b[1];
        syy += b[1] * b[1];
        sxk += b[0] * kappa;
        syk += b[1] * kappa;
    }
    const double det = sxx * syy - sxy * sxy;
    const double mx = (syy * sxk - sxy * syk) / det;
    const double my = (sxx * syk - sxy * sxk) / det;
    return {std::hypot(mx, my), std::atan2(my, mx)};
}

double wrap_pi(double a) { return std::remainder(a, 2.0 * kPi); }

}  // namespace

// ---- RobustCurve -----------------------------------------------------------

RobustCurve::RobustCurve(double mu, double epsilon, double length, std::size_t nodes)
    : mu_(mu), epsilon_(epsilon), length_(length) {
    if (!(length > 0.0) || nodes < 3) throw InputError("RobustCurve: invalid length or node count");
    h_ = length / static_cast<double>(nodes - 1);
    FrameRhs rhs{mu * std::cos(epsilon), mu * std::sin(epsilon)};
    Dopri5<9> solver(frame_tolerance());
    FrameState y = frame_start();
    double s = 0.0;
    r_.reserve(nodes);
    t_.reserve(nodes);
    gamma_.reserve(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
        const double target = (j + 1 == nodes) ? length : h_ * static_cast<double>(j);
        solver.advance(rhs, s, y, target);
        r_.push_back({y[0], y[1], y[2]});
        t_.push_back({y[3], y[4], y[5]});
    }
    moment_ = {y[6], y[7], y[8]};
    gamma_.push_back(std::atan2(t_[0][1], t_[0][0]));
    for (std::size_t j = 1; j + 1 < nodes; ++j)
        gamma_.push_back(nearest_branch(std::atan2(r_[j][1], r_[j][0]), gamma_.back()));
    gamma_.push_back(nearest_branch(std::atan2(-t_.back()[1], -t_.back()[0]), gamma_.back()));
}

double RobustCurve::curvature(const Vec3& r) const {
    return mu_ * (std::cos(epsilon_) * r[0] + std::sin(epsilon_) * r[1]);
}

CurvePoint RobustCurve::at(double s) const {
    s = std::clamp(s, 0.0, length_);
    const std::size_t last = r_.size() - 1;
    std::size_t j = std::min(static_cast<std::size_t>(s / h_), last - 1);
    const double s0 = h_ * static_cast<double>(j);
    const double u = (s - s0) / h_;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    auto tdot = [&](std::size_t k) {
        const Vec3 n = cross(r_[k], t_[k]);
        const double kap = curvature(r_[k]);
        return Vec3{-r_[k][0] + kap * n[0], -r_[k][1] + kap * n[1], -r_[k][2] + kap * n[2]};
    };
    const Vec3 d0 = tdot(j), d1 = tdot(j + 1);
    Vec3 r{}, t{};
    for (int i = 0; i < 3; ++i) {
        r[i] = h00 * r_[j][i] + h10 * h_ * t_[j][i] + h01 * r_[j + 1][i] + h11 * h_ * t_[j + 1][i];
        t[i] = h00 * t_[j][i] + h10 * h_ * d0[i] + h01 * t_[j + 1][i] + h11 * h_ * d1[i];
    }
    r = normalized(r);
    const double rt = dot(r, t);
    t = normalized({t[0] - rt * r[0], t[1] - rt * r[1], t[2] - rt * r[2]});

    CurvePoint p;
    p.position = r;
    p.tangent = t;
    p.curvature = curvature(r);
    const double rho = std::hypot(r[0], r[1]);
    p.theta = std::atan2(rho, r[2]);
    if (s <= 0.0 || s >= length_ || rho == 0.0) {
        p.gamma = (s < 0.5 * length_) ? gamma_.front() : gamma_.back();
        p.varphi = 0.5 * kPi;
        if (s <= 0.0 || s >= length_) {
            p.position = (s <= 0.0) ? r_.front() : r_.back();
            p.theta = (s <= 0.0) ? 0.0 : kPi;
            p.tangent = (s <= 0.0) ? t_.front() : t_.back();
            p.curvature = curvature(p.position);
        }
        return p;
    }
    const double gref = gamma_[j] + u * (gamma_[j + 1] - gamma_[j]);
    p.gamma = nearest_branch(std::atan2(r[1], r[0]), gref);
    const double cg = r[0] / rho, sg = r[1] / rho;
    const Vec3 e_theta{r[2] * cg, r[2] * sg, -rho};
    const Vec3 e_gamma{-sg, cg, 0.0};
    p.varphi = std::atan2(dot(t, e_theta), dot(t, e_gamma));
    return p;
}

// ---- polygon helpers -------------------------------------------------------

double polygon_length(std::span<const Vec3> points) {
    double l = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) l += arc_terms(points[k - 1], points[k]).psi;
    return l;
}

Vec3 polygon_moment(std::span<const Vec3> points) {
    Vec3 n{0, 0, 0};
    for (std::size_t k = 1; k < points.size(); ++k) {
        const Vec3 d = arc_terms(points[k - 1], points[k]).n;
        for (int i = 0; i < 3; ++i) n[i] += d[i];
    }
    return n;
}

// ---- residuals ---------------------------------------------------------------

std::array<double, 2> robustness_residuals(const GeodesicTrajectory& g) {
    const std::size_t n = g.size();
    std::vector<Complex> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * Complex(std::cos(g.theta[i]) * std::cos(g.varphi[i]), -std::sin(g.varphi[i])) *
               std::polar(1.0, g.gamma_grid[i]);
    const Complex v = simpson(g.arc, w);
    return {v.real(), v.imag()};
}

std::array<double, 2> path_residuals(std::span<const double> u, std::span<const double> theta,
                                     std::span<const double> gamma, std::span<const double> theta_rate,
                                     std::span<const double> gamma_rate) {
    const std::size_t n = u.size();
    if (theta.size() != n || gamma.size() != n || theta_rate.size() != n || gamma_rate.size() != n || n < 3)
        throw InputError("path_residuals: inconsistent sample counts");
    std::vector<Complex> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * Complex(0.5 * gamma_rate[i] * std::sin(2.0 * theta[i]), -theta_rate[i]) *
               std::polar(1.0, gamma[i]);
    const Complex v = simpson(u, w);
    return {v.real(), v.imag()};
}

// ---- geodesic ----------------------------------------------------------------

GeodesicTrajectory geodesic_from_law(double mu, double epsilon, double length, std::size_t grid_points) {
    if (grid_points < 3) throw InputError("geodesic_from_law: need at least 3 grid points");
    auto curve = std::make_shared<const RobustCurve>(mu, epsilon, length);
    GeodesicTrajectory g;
    g.arc = uniform_grid(0.0, length, grid_points);
    for (double s : g.arc) {
        const CurvePoint p = curve->at(s);
        g.theta.push_back(p.theta);
        g.gamma_grid.push_back(p.gamma);
        g.varphi.push_back(p.varphi);
        g.curvature.push_back(p.curvature);
    }
    g.area = length;
    g.gamma_final = curve->gamma_final();
    g.mu = mu;
    g.epsilon = epsilon;
    g.curve = curve;
    g.residuals = robustness_residuals(g);
    return g;
}

GeodesicTrajectory solve_geodesic(std::size_t grid_points, double tol) {
    GeodesicOptions o;
    o.grid_points = grid_points;
    o.tol = tol;
    return solve_geodesic(o);
}

GeodesicTrajectory solve_geodesic(const GeodesicOptions& options) {
    if (options.grid_points < 64) throw InputError("solve_geodesic: grid_points must be >= 64");
    if (!(options.tol > 0.0)) throw InputError("solve_geodesic: tol must be positive");
    if (options.starts < 1 || options.starts > 5) throw InputError("solve_geodesic: starts must be in 1..5");

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> dist(kPi, 2.0 * kPi);
    const std::array<double, 5> seeds{5.0 * kPi / 3.0, kPi, 4.0 * kPi / 3.0, 2.0 * kPi, dist(rng)};

    std::vector<GeodesicMinimum> minima;
    std::vector<std::vector<Vec3>> polygons;
    std::vector<double> polygon_lengths;
    double best_misfit = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < options.starts; ++k) {
        PolygonSolution poly = solve_polygon(options.grid_points, seeds[k]);
        fix_gauge(poly.points);
        const auto [mu0, eps0] = fit_curvature_law(poly.points);
        const ShotResult shot = shoot(mu0, eps0, poly.length);
        best_misfit = std::min(best_misfit, shot.misfit);
        if (!shot.converged) continue;
        const RobustCurve curve(shot.mu, shot.epsilon, shot.length, 2049);
        GeodesicMinimum m{shot.length, curve.gamma_final(), shot.mu, shot.epsilon, seeds[k], 1};
        auto same = std::find_if(minima.begin(), minima.end(), [&](const GeodesicMinimum& o) {
            return std::abs(o.area - m.area) < 1e-6 && std::abs(wrap_pi(o.gamma_final - m.gamma_final)) < 1e-6;
        });
        if (same != minima.end()) {
            ++same->seeds;
            continue;
        }
        minima.push_back(m);
        polygons.push_back(std::move(poly.points));
        polygon_lengths.push_back(poly.length);
    }
    if (minima.empty())
        throw ConvergenceError("solve_geodesic: no start converged; best endpoint misfit " +
                               std::to_string(best_misfit));
    std::size_t best = 0;
    for (std::size_t k = 1; k < minima.size(); ++k)
        if (minima[k].area < minima[best].area) best = k;

    GeodesicTrajectory g =
        geodesic_from_law(minima[best].mu, minima[best].epsilon, minima[best].area, options.grid_points);
    g.polygon = polygons[best];
    g.polygon_area = polygon_lengths[best];
    g.minima = minima;
    if (std::max(std::abs(g.residuals[0]), std::abs(g.residuals[1])) > options.tol)
        throw ConvergenceError("solve_geodesic: residuals (" + std::to_string(g.residuals[0]) + ", " +
                               std::to_string(g.residuals[1]) + ") above tolerance");
    return g;
}

// ---- time parametrization -----------------------------------------------------

namespace {

RioDesign parametrize(const GeodesicTrajectory& g, std::function<double(double)> omega,
                      std::function<double(double)> partial_area, double t0, double t1, double peak,
                      std::size_t samples, const std::string& label) {
    if (!g.curve) throw InputError("parametrize: geodesic has no curve attached");
    if (samples < 2) throw InputError("parametrize: need at least 2 samples");
    const auto curve = g.curve;
    RioDesign d;
    d.geodesic = g;
    AngleSamples& a = d.angles;
    AngleRates rates;
    a.time = uniform_grid(t0, t1, samples);
    for (double t : a.time) {
        const double om = omega(t);
        const CurvePoint p = curve->at(partial_area(t));
        a.theta.push_back(p.theta);
        a.varphi.push_back(wrap_pi(p.varphi));
        a.gamma.push_back(p.gamma);
        const double st = std::sin(p.theta);
        rates.theta_dot.push_back(om * std::sin(p.varphi));
        if (st > 1e-12) {
            const double gp = std::cos(p.varphi) / st;
            rates.gamma_dot.push_back(om * gp);
            rates.varphi_dot.push_back(om * (std::cos(p.theta) * gp - p.curvature));
        } else {
            rates.gamma_dot.push_back(0.0);
            rates.varphi_dot.push_back(-om * p.curvature);
        }
    }
    d.gamma_of_t = a.gamma;
    d.controls = angles_to_controls(a, rates);
    d.controls.label = label;
    d.controls.exact = [curve, omega, partial_area](double t) {
        const double om = omega(t);
        return ControlSample{om, -om * curve->at(partial_area(t)).curvature};
    };
    for (std::size_t i = 0; i < samples; ++i)
        d.rabi_mismatch = std::max(d.rabi_mismatch, std::abs(d.controls.rabi[i] - omega(a.time[i])) / peak);
    return d;
}

}  // namespace

RioDesign parametrize_by_pulse(const GeodesicTrajectory& g, const HyperGaussianSpec& pulse, std::size_t samples) {
    pulse.validate();
    if (std::abs(pulse.area() - g.area) > 1e-6 * g.area)
        throw InputError("parametrize_by_pulse: pulse area " + std::to_string(pulse.area()) +
                         " does not match path length " + std::to_string(g.area));
    const double w = pulse.support_half_width();
    const double length = g.area;
    RioDesign d = parametrize(
        g, [pulse](double t) { return pulse.value(t); },
        [pulse, length](double t) { return std::min(pulse.cumulative_area(t), length); }, -w, w, pulse.peak,
        samples, "hg-rio");
    d.pulse = pulse;
    return d;
}

RioDesign parametrize_by_square_pulse(const GeodesicTrajectory& g, double peak, std::size_t samples) {
    if (!(peak > 0.0)) throw InputError("parametrize_by_square_pulse: peak must be positive");
    RioDesign d = parametrize(
        g, [peak](double) { return peak; }, [peak](double t) { return peak * t; }, 0.0, g.area / peak, peak,
        samples, "square-rio");
    d.square = true;
    d.pulse = HyperGaussianSpec{peak, 0.5 * g.area / peak, 2};
    return d;
}

RioDesign hg_rio_design(int order, double peak, std::size_t samples, const GeodesicOptions& options) {
    const GeodesicTrajectory g = solve_geodesic(options);
    return parametrize_by_pulse(g, hyper_gaussian_matched(order, peak, g.area), samples);
}

ControlWaveforms flat_pi_controls(double peak, std::size_t samples) {
    if (!(peak > 0.0)) throw InputError("flat_pi_controls: peak must be positive");
    return sample_controls([peak](double) { return ControlSample{peak, 0.0}; }, 0.0, kPi / peak, samples, "flat-pi");
}

}  // namespace qsq
