#pragma once

#include <string>
#include <vector>

#include "alkit/matrix.hpp"
#include "alkit/pool.hpp"

namespace alkit {

class ModelOracle;

enum class FeatureKind { token, embedding, output };

std::string to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s);

// An n x d real matrix over pool items, tagged with how it was produced.
struct FeatureView {
  Matrix m;
  FeatureKind kind = FeatureKind::token;
  std::vector<int> item_ids;  // pool index per row

  // No NaN/Inf, d >= 1, id map in sync; for output views over a
  // classification pool every row must be a probability vector.
  void validate(const Pool* pool = nullptr) const;
};

// kind=token: rows are token sequences right-padded with pad_id and
// truncated to pad_len, cast to reals; needs no model. kind=embedding and
// kind=output come from a trained model. `items` empty means all pool items.
FeatureView make_feature_view(const Pool& pool, FeatureKind kind,
                              const ModelOracle* model,
                              const std::vector<int>& items = {},
                              int pad_len = 256, int pad_id = 0);

}  // namespace alkit
