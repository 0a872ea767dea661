#include "gemsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gemsim {

double decay_efficiency(const DecayModel& model, double t)
{
    double u = t / model.tau_d;
    return model.eta0 * std::exp(-u * u) * std::exp(-t / model.tau0);
}

namespace {

// Solve the small symmetric system A x = b in place (n = 2 or 3).
bool solve_normal(double a[3][3], double b[3], double x[3], int n)
{
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) {
                pivot = r;
            }
        }
        if (std::abs(a[pivot][col]) < 1e-300) {
            return false;
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    return true;
}

double cost_of(const std::vector<std::pair<double, double>>& pts, const DecayModel& m)
{
    double cost = 0.0;
    for (const auto& [t, eta] : pts) {
        double r = eta - decay_efficiency(m, t);
        cost += r * r;
    }
    return cost;
}

// Seed from quadratic regression on ln(eta): ln eta = ln eta0 - t/tau0 - (t/tau_d)^2.
DecayModel initial_guess(const std::vector<std::pair<double, double>>& pts,
                         std::optional<double> fixed_tau_d)
{
    double sx[5] = {0, 0, 0, 0, 0};
    double sy = 0, sxy = 0, sx2y = 0;
    int n = 0;
    for (const auto& [t, eta] : pts) {
        if (!(eta > 1e-290)) {
            continue;
        }
        double y = std::log(eta);
        if (fixed_tau_d) {
            y += (t / *fixed_tau_d) * (t / *fixed_tau_d);
        }
        double tp = 1.0;
        for (int k = 0; k < 5; ++k) {
            sx[k] += tp;
            tp *= t;
        }
        sy += y;
        sxy += t * y;
        sx2y += t * t * y;
        ++n;
    }

    DecayModel guess{0.5, fixed_tau_d.value_or(20.0), 10.0};
    if (n < 2) {
        return guess;
    }

    double coef[3] = {0.0, 0.0, 0.0};
    if (fixed_tau_d || n == 2) {
        double a[3][3] = {{sx[0], sx[1], 0}, {sx[1], sx[2], 0}, {0, 0, 1}};
        double b[3] = {sy, sxy, 0};
        double x[3];
        if (solve_normal(a, b, x, 2)) {
            coef[0] = x[0];
            coef[1] = x[1];
        }
    } else {
        double a[3][3] = {{sx[0], sx[1], sx[2]}, {sx[1], sx[2], sx[3]}, {sx[2], sx[3], sx[4]}};
        double b[3] = {sy, sxy, sx2y};
        double x[3];
        if (solve_normal(a, b, x, 3)) {
            coef[0] = x[0];
            coef[1] = x[1];
            coef[2] = x[2];
        }
    }

    guess.eta0 = std::clamp(std::exp(coef[0]), 1e-6, 10.0);
    guess.tau0 = coef[1] < -1e-12 ? -1.0 / coef[1] : 1e6;
    if (fixed_tau_d) {
        guess.tau_d = *fixed_tau_d;
    } else {
        guess.tau_d = coef[2] < -1e-12 ? 1.0 / std::sqrt(-coef[2]) : 1e6;
    }
    guess.tau0 = std::clamp(guess.tau0, 1e-6, 1e9);
    guess.tau_d = std::clamp(guess.tau_d, 1e-6, 1e9);
    return guess;
}

} // namespace

FitResult fit_decay(const std::vector<std::pair<double, double>>& points,
                    std::optional<double> fixed_tau_d)
{
    const std::size_t min_points = fixed_tau_d ? 2 : 3;
    std::set<double> distinct;
    bool any_positive = false;
    for (const auto& [t, eta] : points) {
        distinct.insert(t);
        if (eta > 0.0) {
            any_positive = true;
        }
    }
    if (points.size() < min_points || distinct.size() < min_points) {
        throw std::invalid_argument("insufficient points for decay fit");
    }
    if (!any_positive) {
        throw std::invalid_argument("degenerate data: all efficiencies are zero");
    }
    if (fixed_tau_d && !(*fixed_tau_d > 0.0)) {
        throw std::invalid_argument("fixed tau_d must be positive");
    }

    DecayModel model = initial_guess(points, fixed_tau_d);
    double cost = cost_of(points, model);
    double lambda = 1e-6;
    const int max_iter = 200;

    FitResult out;
    out.diagnostics.converged = false;

    int iter = 0;
    for (; iter < max_iter; ++iter) {
        // Accumulate J^T J and J^T r over active parameters.
        // Parameter order: eta0, tau_d, tau0 (tau_d dropped when clamped).
        const int np = fixed_tau_d ? 2 : 3;
        double jtj[3][3] = {{0}}, jtr[3] = {0};
        for (const auto& [t, eta] : points) {
            double m = decay_efficiency(model, t);
            double r = eta - m;
            double grad[3];
            if (fixed_tau_d) {
                grad[0] = m / model.eta0;
                grad[1] = m * t / (model.tau0 * model.tau0);
            } else {
                grad[0] = m / model.eta0;
                grad[1] = m * 2.0 * t * t / (model.tau_d * model.tau_d * model.tau_d);
                grad[2] = m * t / (model.tau0 * model.tau0);
            }
            for (int a = 0; a < np; ++a) {
                jtr[a] += grad[a] * r;
                for (int b = 0; b < np; ++b) {
                    jtj[a][b] += grad[a] * grad[b];
                }
            }
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 40 && !stepped; ++attempt) {
            double a[3][3], b[3], step[3];
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    a[i][j] = jtj[i][j];
                }
                a[i][i] += lambda * std::max(jtj[i][i], 1e-30);
                b[i] = jtr[i];
            }
            if (!solve_normal(a, b, step, np)) {
                lambda *= 10.0;
                continue;
            }
            DecayModel trial = model;
            if (fixed_tau_d) {
                trial.eta0 += step[0];
                trial.tau0 += step[1];
            } else {
                trial.eta0 += step[0];
                trial.tau_d += step[1];
                trial.tau0 += step[2];
            }
            if (!(trial.eta0 > 0.0) || !(trial.tau_d > 0.0) || !(trial.tau0 > 0.0)) {
                lambda *= 10.0;
                continue;
            }
            double trial_cost = cost_of(points, trial);
            if (trial_cost <= cost) {
                double step_norm = 0.0, param_norm = 0.0;
                for (int i = 0; i < np; ++i) {
                    step_norm += step[i] * step[i];
                }
                param_norm = model.eta0 * model.eta0 + model.tau0 * model.tau0 +
                             model.tau_d * model.tau_d;
                model = trial;
                cost = trial_cost;
                lambda = std::max(lambda / 3.0, 1e-14);
                stepped = true;
                if (std::sqrt(step_norm) < 1e-10 * (1.0 + std::sqrt(param_norm))) {
                    out.diagnostics.converged = true;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) {
            // Damping saturated: the iterate is at a (numerical) minimum.
            out.diagnostics.converged = true;
        }
        if (out.diagnostics.converged) {
            break;
        }
    }

    out.model = model;
    out.diagnostics.iterations = iter + 1;
    out.diagnostics.residual_norm = std::sqrt(cost);

    if (!out.diagnostics.converged) {
        std::ostringstream oss;
        oss << "decay fit did not converge after " << max_iter
            << " iterations; best iterate eta0=" << model.eta0
            << " tau_d=" << model.tau_d << " tau0=" << model.tau0
            << " residual=" << std::sqrt(cost);
        throw std::runtime_error(oss.str());
    }

    // Per-parameter 1-sigma from the residual curvature.
    const int np = fixed_tau_d ? 2 : 3;
    if (static_cast<int>(points.size()) > np) {
        double s2 = cost / (points.size() - np);
        double jtj[3][3] = {{0}};
        for (const auto& [t, eta] : points) {
            (void)eta;
            double m = decay_efficiency(model, t);
            double grad[3];
            grad[0] = m / model.eta0;
            if (fixed_tau_d) {
                grad[1] = m * t / (model.tau0 * model.tau0);
                grad[2] = 0.0;
            } else {
                grad[1] = m * 2.0 * t * t / (model.tau_d * model.tau_d * model.tau_d);
                grad[2] = m * t / (model.tau0 * model.tau0);
            }
            for (int a = 0; a < np; ++a) {
                for (int b = 0; b < np; ++b) {
                    jtj[a][b] += grad[a] * grad[b];
                }
            }
        }
        // Invert J^T J column by column.
        for (int col = 0; col < np; ++col) {
            double a[3][3], b[3] = {0, 0, 0}, x[3];
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    a[i][j] = jtj[i][j];
                }
            }
            b[col] = 1.0;
            if (solve_normal(a, b, x, np) && x[col] >= 0.0) {
                int slot = (fixed_tau_d && col == 1) ? 2 : col;
                out.diagnostics.confidence[slot] = std::sqrt(s2 * x[col]);
            }
        }
    }

    return out;
}

double fidelity_bound(const FidelityPoint& point)
{
    return 1.0 / (1.0 + point.nbar * (1.0 - std::sqrt(point.eta_m)));
}

double classical_benchmark(double nbar)
{
    return (nbar + 1.0) / (2.0 * nbar + 1.0);
}

double quantum_capacity(const DecayModel& model, double t,
                        const std::function<double(double)>& benchmark)
{
    double eta_m = decay_efficiency(model, t);
    if (eta_m >= 1.0) {
        return std::numeric_limits<double>::infinity();
    }
    if (eta_m <= 0.0) {
        return 0.0;
    }
    auto beats = [&](double nbar) {
        return fidelity_bound({nbar, eta_m}) > benchmark(nbar);
    };
    double hi = 1.0;
    while (beats(hi)) {
        hi *= 2.0;
        if (hi > 1e15) {
            return std::numeric_limits<double>::infinity();
        }
    }
    double lo = 0.0;
    for (int i = 0; i < 300 && hi - lo > 1e-6 * hi && hi - lo > 1e-12; ++i) {
        double mid = 0.5 * (lo + hi);
        if (beats(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

double quantum_capacity_closed_form(double eta_m)
{
    double x = 1.0 - std::sqrt(eta_m);
    if (x <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return (1.0 - x) / x;
}

} // namespace gemsim
