#include "scenemem/kernreg/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace scenemem::kernreg {

KernelSpec KernelSpec::equal_sum(const std::vector<KernelSpec>& parts) {
  KernelSpec spec;
  spec.kind = KernelKind::sum;
  for (const auto& part : parts) {
    spec.terms.push_back({part, 1.0 / static_cast<double>(parts.size()), 0, 0});
  }
  return spec;
}

void validate(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::linear:
    case KernelKind::hik:
      return;
    case KernelKind::rbf:
      if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma)) {
        throw KernelError("rbf gamma must be positive and finite");
      }
      return;
    case KernelKind::sum: {
      if (spec.terms.empty()) throw KernelError("kernel sum has no terms");
      bool any_positive = false;
      for (const auto& term : spec.terms) {
        if (!(term.weight >= 0.0) || !std::isfinite(term.weight)) {
          throw KernelError("kernel sum weights must be non-negative");
        }
        any_positive = any_positive || term.weight > 0.0;
        validate(term.kernel);
      }
      if (!any_positive) throw KernelError("kernel sum needs at least one positive weight");
      return;
    }
  }
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw KernelError("kernel dimension mismatch: " + std::to_string(x.size()) + " vs " +
                      std::to_string(y.size()));
  }
  switch (spec.kind) {
    case KernelKind::linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return s;
    }
    case KernelKind::rbf: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
      }
      return std::exp(-spec.gamma * d2);
    }
    case KernelKind::hik: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0 || y[i] < 0.0) {
          throw KernelError("histogram intersection kernel needs non-negative inputs");
        }
        s += std::min(x[i], y[i]);
      }
      return s;
    }
    case KernelKind::sum: {
      double s = 0.0;
      for (const auto& term : spec.terms) {
        const std::size_t len = term.length == 0 ? x.size() - std::min(term.offset, x.size()) : term.length;
        if (term.offset + len > x.size() || len == 0) {
          throw KernelError("kernel term slice exceeds input dimension " + std::to_string(x.size()));
        }
        s += term.weight * kernel_eval(term.kernel, x.subspan(term.offset, len), y.subspan(term.offset, len));
      }
      return s;
    }
  }
  return 0.0;
}

std::vector<double> gram_matrix(const KernelSpec& spec, const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<double> gram(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double k = kernel_eval(spec, rows[i], rows[j]);
      gram[i * n + j] = k;
      gram[j * n + i] = k;
    }
  }
  return gram;
}

namespace {

void mark_dims(const KernelSpec& spec, std::size_t offset, std::size_t length,
               std::vector<int>& dense, std::vector<int>& histogram) {
  switch (spec.kind) {
    case KernelKind::linear:
    case KernelKind::rbf:
      for (std::size_t i = offset; i < offset + length; ++i) dense[i] = 1;
      return;
    case KernelKind::hik:
      for (std::size_t i = offset; i < offset + length; ++i) histogram[i] = 1;
      return;
    case KernelKind::sum:
      for (const auto& term : spec.terms) {
        const std::size_t len = term.length == 0 ? length - std::min(term.offset, length) : term.length;
        if (term.offset + len > length) throw KernelError("kernel term slice exceeds input dimension");
        mark_dims(term.kernel, offset + term.offset, len, dense, histogram);
      }
      return;
  }
}

std::size_t widest_rbf(const KernelSpec& spec, std::size_t length) {
  switch (spec.kind) {
    case KernelKind::rbf:
      return length;
    case KernelKind::sum: {
      std::size_t widest = 0;
      for (const auto& term : spec.terms) {
        const std::size_t len = term.length == 0 ? length - std::min(term.offset, length) : term.length;
        widest = std::max(widest, widest_rbf(term.kernel, len));
      }
      return widest;
    }
    default:
      return 0;
  }
}

}  // namespace

std::vector<bool> standardized_dims(const KernelSpec& spec, std::size_t dim) {
  std::vector<int> dense(dim, 0), histogram(dim, 0);
  mark_dims(spec, 0, dim, dense, histogram);
  std::vector<bool> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = dense[i] && !histogram[i];
  return out;
}

KernelSpec with_gamma(const KernelSpec& spec, double gamma) {
  KernelSpec out = spec;
  if (out.kind == KernelKind::rbf) out.gamma = gamma;
  for (auto& term : out.terms) term.kernel = with_gamma(term.kernel, gamma);
  return out;
}

bool uses_rbf(const KernelSpec& spec) {
  if (spec.kind == KernelKind::rbf) return true;
  return std::any_of(spec.terms.begin(), spec.terms.end(),
                     [](const KernelTerm& t) { return uses_rbf(t.kernel); });
}

std::size_t rbf_dim(const KernelSpec& spec, std::size_t dim) { return widest_rbf(spec, dim); }

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::rbf: return "rbf";
    case KernelKind::hik: return "hik";
    case KernelKind::sum: return "sum";
  }
  return "?";
}

nlohmann::json to_json(const KernelSpec& spec) {
  nlohmann::json j{{"kind", to_string(spec.kind)}};
  if (spec.kind == KernelKind::rbf) j["gamma"] = spec.gamma;
  if (spec.kind == KernelKind::sum) {
    j["terms"] = nlohmann::json::array();
    for (const auto& term : spec.terms) {
      j["terms"].push_back({{"kernel", to_json(term.kernel)},
                            {"weight", term.weight},
                            {"offset", term.offset},
                            {"length", term.length}});
    }
  }
  return j;
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  KernelSpec spec;
  if (kind == "linear") {
    spec.kind = KernelKind::linear;
  } else if (kind == "rbf") {
    spec.kind = KernelKind::rbf;
    spec.gamma = j.at("gamma").get<double>();
  } else if (kind == "hik" || kind == "histogram_intersection") {
    spec.kind = KernelKind::hik;
  } else if (kind == "sum") {
    spec.kind = KernelKind::sum;
    for (const auto& t : j.at("terms")) {
      spec.terms.push_back({kernel_from_json(t.at("kernel")), t.value("weight", 1.0),
                            t.value("offset", std::size_t{0}), t.value("length", std::size_t{0})});
    }
  } else {
    throw KernelError("unknown kernel kind: " + kind);
  }
  validate(spec);
  return spec;
}

}  // namespace scenemem::kernreg
