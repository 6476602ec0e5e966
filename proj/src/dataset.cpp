#include "fimlab/dataset.hpp"

namespace fimlab {

DataSet::DataSet(Matrix obs) : obs_(std::move(obs)) {
  if (obs_.rows() < 1 || obs_.cols() < 1) {
    throw Error("DataSet: need at least one observation and one coordinate");
  }
  if (!obs_.allFinite()) {
    throw NonFiniteEvaluation("DataSet: non-finite observations");
  }
}

}  // namespace fimlab
