#include "evcatch/prediction.hpp"

#include <cstdio>
#include <ostream>

namespace evcatch {

void write_prediction_csv(std::ostream& out,
                          std::span<const FramePrediction> predictions) {
  out << "t_us,d_m,sigma_m,ttc_us\n";
  char buf[96];
  for (const FramePrediction& p : predictions) {
    std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g",
                  static_cast<long long>(p.t_us), p.d_m, p.sigma_m, p.ttc_us);
    out << buf << '\n';
  }
}

}  // namespace evcatch
