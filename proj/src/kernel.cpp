#include "bodegen/kernel.hpp"

namespace bodegen {

std::string_view to_string(KernelFamily family) {
  return family == KernelFamily::RBF ? "rbf" : "matern52";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "matern52") return KernelFamily::Matern52;
  if (name == "rbf") return KernelFamily::RBF;
  throw InvalidArgument("unknown kernel family '" + std::string(name) + "' (expected matern52 or rbf)");
}

void KernelParams::validate() const {
  if (lengthscales.size() < 1) throw InvalidArgument("kernel needs at least one lengthscale");
  if (!(lengthscales.array() > 0.0).all() || !lengthscales.allFinite())
    throw InvalidArgument("lengthscales must be positive and finite");
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
    throw InvalidArgument("signal variance must be positive");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw InvalidArgument("noise variance must be non-negative");
}

}  // namespace bodegen
