#include "scenemem/kernreg/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scenemem/common/container.hpp"
#include "scenemem/common/text_io.hpp"

namespace scenemem::kernreg {

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) {
    throw std::invalid_argument("feature dimension " + std::to_string(x.size()) +
                                " does not match model dimension " + std::to_string(mean.size()));
  }
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (active[i]) out[i] = (out[i] - mean[i]) / scale[i];
  }
  return out;
}

Standardizer identity_standardizer(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0), std::vector<bool>(dim, false)};
}

Standardizer fit_standardizer(const std::vector<std::vector<double>>& rows, std::vector<bool> active) {
  const std::size_t dim = active.size();
  Standardizer s = identity_standardizer(dim);
  s.active = std::move(active);
  if (rows.empty()) return s;
  const double n = static_cast<double>(rows.size());
  for (std::size_t d = 0; d < dim; ++d) {
    if (!s.active[d]) continue;
    double sum = 0.0;
    for (const auto& r : rows) sum += r[d];
    const double mu = sum / n;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[d] - mu) * (r[d] - mu);
    const double sd = std::sqrt(ss / n);
    s.mean[d] = mu;
    s.scale[d] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

double svr_dual_objective(std::span<const double> gram, std::span<const double> y,
                          std::span<const double> alpha, std::span<const double> alpha_star,
                          double epsilon) {
  const std::size_t n = y.size();
  double quad = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ci = alpha[i] - alpha_star[i];
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += gram[i * n + j] * (alpha[j] - alpha_star[j]);
    quad += ci * row;
    lin += epsilon * (alpha[i] + alpha_star[i]) - y[i] * ci;
  }
  return 0.5 * quad + lin;
}

DualSolution solve_svr_dual(std::span<const double> gram, std::span<const double> y, double C,
                            double epsilon, const SolverOptions& options) {
  const std::size_t l = y.size();
  if (gram.size() != l * l) throw std::invalid_argument("solve_svr_dual: gram must be n x n");
  if (!(C > 0.0)) throw std::invalid_argument("SVR: C must be positive");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("SVR: epsilon must be non-negative");

  // Variables t < l are alpha (sign +1), t >= l are alpha* (sign -1).
  const std::size_t m = 2 * l;
  auto sign = [l](std::size_t t) { return t < l ? 1.0 : -1.0; };
  auto sample = [l](std::size_t t) { return t < l ? t : t - l; };
  auto q = [&](std::size_t a, std::size_t b) {
    return sign(a) * sign(b) * gram[sample(a) * l + sample(b)];
  };
  constexpr double kTau = 1e-12;

  std::vector<double> beta(m, 0.0), grad(m);
  for (std::size_t i = 0; i < l; ++i) {
    grad[i] = epsilon - y[i];
    grad[i + l] = epsilon + y[i];
  }
  auto in_up = [&](std::size_t t) { return sign(t) > 0 ? beta[t] < C : beta[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return sign(t) > 0 ? beta[t] > 0.0 : beta[t] < C; };

  DualSolution sol;
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t i = m, j = m;
    for (std::size_t t = 0; t < m; ++t) {
      const double v = -sign(t) * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && -v > gmax2) {
        gmax2 = -v;
        j = t;
      }
    }
    sol.max_violation = (i == m || j == m) ? 0.0 : gmax + gmax2;
    if (i == m || j == m || sol.max_violation <= options.tol) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= options.max_iterations) break;
    ++sol.iterations;

    const double old_i = beta[i], old_j = beta[j];
    const double qii = q(i, i), qjj = q(j, j), qij = q(i, j);
    double& ai = beta[i];
    double& aj = beta[j];
    if (sign(i) != sign(j)) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > C) {
          ai = C;
          aj = C - diff;
        }
      } else if (aj > C) {
        aj = C;
        ai = C + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) {
          ai = C;
          aj = sum - C;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > C) {
        if (aj > C) {
          aj = C;
          ai = sum - C;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    const double di = ai - old_i, dj = aj - old_j;
    for (std::size_t t = 0; t < m; ++t) grad[t] += q(t, i) * di + q(t, j) * dj;
  }

  // Bias: average over free variables, else the middle of the feasible range.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < m; ++t) {
    const double yg = sign(t) * grad[t];
    if (beta[t] >= C) {
      if (sign(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (beta[t] <= 0.0) {
      if (sign(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  sol.bias = -rho;
  sol.alpha.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(l));
  sol.alpha_star.assign(beta.begin() + static_cast<std::ptrdiff_t>(l), beta.end());
  sol.objective = svr_dual_objective(gram, y, sol.alpha, sol.alpha_star, epsilon);
  return sol;
}

SvrModel svr_train(const std::vector<std::vector<double>>& X, std::span<const double> y,
                   const SvrParams& params) {
  if (X.size() != y.size()) throw std::invalid_argument("svr_train: X and y differ in length");
  if (X.size() < 2) throw std::invalid_argument("svr_train: need at least 2 samples");
  for (double v : y) {
    if (!std::isfinite(v)) throw std::domain_error("svr_train: non-finite target");
  }
  const std::size_t dim = X.front().size();
  for (const auto& row : X) {
    if (row.size() != dim) throw std::invalid_argument("svr_train: ragged feature matrix");
  }
  validate(params.kernel);

  SvrModel model;
  model.kernel = params.kernel;
  model.C = params.C;
  model.epsilon = params.epsilon;
  model.standardizer = params.standardize
                           ? fit_standardizer(X, standardized_dims(params.kernel, dim))
                           : identity_standardizer(dim);
  std::vector<std::vector<double>> rows;
  rows.reserve(X.size());
  for (const auto& row : X) rows.push_back(model.standardizer.apply(row));

  const auto gram = gram_matrix(params.kernel, rows);
  for (double k : gram) {
    if (!std::isfinite(k)) throw std::domain_error("svr_train: non-finite kernel value");
  }
  const auto sol = solve_svr_dual(gram, y, params.C, params.epsilon,
                                  {params.tol, params.max_iterations});
  model.bias = sol.bias;
  model.diagnostics = {sol.iterations, sol.converged, sol.max_violation, sol.objective, 0, 0};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double c = sol.coef(i);
    if (c == 0.0) continue;
    model.support_vectors.push_back(rows[i]);
    model.dual_coeffs.push_back(c);
    if (std::abs(c) >= params.C) ++model.diagnostics.n_bounded;
  }
  model.diagnostics.n_support = model.dual_coeffs.size();
  return model;
}

double svr_predict(const SvrModel& model, std::span<const double> x) {
  const auto z = model.standardizer.apply(x);
  double f = model.bias;
  for (std::size_t i = 0; i < model.dual_coeffs.size(); ++i) {
    f += model.dual_coeffs[i] * kernel_eval(model.kernel, model.support_vectors[i], z);
  }
  return f;
}

std::vector<double> svr_predict(const SvrModel& model, const std::vector<std::vector<double>>& X) {
  std::vector<double> out;
  out.reserve(X.size());
  for (const auto& x : X) out.push_back(svr_predict(model, x));
  return out;
}

void save_svr_model(const std::filesystem::path& path, const SvrModel& model) {
  const std::size_t dim = model.dim();
  auto bin = path;
  bin.replace_extension(".bin");
  std::vector<std::size_t> active;
  for (std::size_t d = 0; d < dim; ++d) {
    if (model.standardizer.active[d]) active.push_back(d);
  }
  nlohmann::json meta{
      {"format", "svr_model"},
      {"kernel", to_json(model.kernel)},
      {"C", model.C},
      {"epsilon", model.epsilon},
      {"bias", model.bias},
      {"dim", dim},
      {"n_support", model.dual_coeffs.size()},
      {"standardized_dims", active},
      {"payload", bin.filename().string()},
      {"diagnostics",
       {{"iterations", model.diagnostics.iterations},
        {"converged", model.diagnostics.converged},
        {"max_violation", model.diagnostics.max_violation},
        {"objective", model.diagnostics.objective},
        {"n_bounded", model.diagnostics.n_bounded}}}};

  std::vector<double> payload;
  payload.reserve(2 * dim + model.dual_coeffs.size() * (dim + 1));
  payload.insert(payload.end(), model.standardizer.mean.begin(), model.standardizer.mean.end());
  payload.insert(payload.end(), model.standardizer.scale.begin(), model.standardizer.scale.end());
  for (const auto& sv : model.support_vectors) payload.insert(payload.end(), sv.begin(), sv.end());
  payload.insert(payload.end(), model.dual_coeffs.begin(), model.dual_coeffs.end());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_container(bin, {{"format", "svr_payload"}, {"dim", dim}, {"n_support", model.dual_coeffs.size()}},
                  std::span<const double>(payload));
  write_json_file(path, meta);
}

SvrModel load_svr_model(const std::filesystem::path& path) {
  const auto meta = read_json_file(path);
  if (meta.value("format", "") != "svr_model") throw SvrError(path.string() + ": not an SVR model");
  SvrModel model;
  model.kernel = kernel_from_json(meta.at("kernel"));
  model.C = meta.at("C").get<double>();
  model.epsilon = meta.at("epsilon").get<double>();
  model.bias = meta.at("bias").get<double>();
  const auto dim = meta.at("dim").get<std::size_t>();
  const auto nsv = meta.at("n_support").get<std::size_t>();
  const auto& diag = meta.at("diagnostics");
  model.diagnostics = {diag.at("iterations").get<std::int64_t>(), diag.at("converged").get<bool>(),
                       diag.at("max_violation").get<double>(), diag.at("objective").get<double>(),
                       nsv, diag.at("n_bounded").get<std::size_t>()};

  const auto container = read_container64(path.parent_path() / meta.at("payload").get<std::string>());
  const auto& p = container.payload;
  if (p.size() != 2 * dim + nsv * (dim + 1)) throw SvrError(path.string() + ": payload size mismatch");
  model.standardizer = identity_standardizer(dim);
  std::copy(p.begin(), p.begin() + dim, model.standardizer.mean.begin());
  std::copy(p.begin() + dim, p.begin() + 2 * dim, model.standardizer.scale.begin());
  for (auto d : meta.at("standardized_dims").get<std::vector<std::size_t>>()) {
    if (d >= dim) throw SvrError(path.string() + ": bad standardized dimension");
    model.standardizer.active[d] = true;
  }
  auto it = p.begin() + 2 * dim;
  for (std::size_t s = 0; s < nsv; ++s, it += dim) model.support_vectors.emplace_back(it, it + dim);
  model.dual_coeffs.assign(it, it + nsv);
  return model;
}

}  // namespace scenemem::kernreg
