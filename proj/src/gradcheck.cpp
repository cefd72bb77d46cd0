#include "geoload/gradcheck.hpp"

#include <string>

namespace geoload::nn {

void throw_non_finite_loss(const ParameterSet& params) {
  std::size_t non_finite = 0;
  double max_abs = 0.0;
  std::size_t worst = 0;
  for (std::size_t a = 0; a < params.arrays.size(); ++a) {
    const auto& arr = params.arrays[a];
    for (Eigen::Index k = 0; k < arr.size(); ++k) {
      const double v = arr.data()[k];
      if (!std::isfinite(v)) {
        ++non_finite;
      } else if (std::abs(v) > max_abs) {
        max_abs = std::abs(v);
        worst = a;
      }
    }
  }
  throw Error(ErrorKind::numeric,
              "non-finite loss; " + std::to_string(non_finite) +
                  " non-finite parameters, largest finite |theta| = " + std::to_string(max_abs) +
                  " in parameter array " + std::to_string(worst));
}

}  // namespace geoload::nn
