#include "alkit/feature.hpp"

#include <cmath>

#include "alkit/models.hpp"

namespace alkit {

std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::token: return "token";
    case FeatureKind::embedding: return "embedding";
    case FeatureKind::output: return "output";
  }
  return "?";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "token") return FeatureKind::token;
  if (s == "embedding") return FeatureKind::embedding;
  if (s == "output") return FeatureKind::output;
  throw ConfigError("unknown feature kind: " + s);
}

void FeatureView::validate(const Pool* pool) const {
  if (m.cols() < 1) throw ConfigError("feature view: d must be >= 1");
  if (m.rows() != item_ids.size())
    throw ConfigError("feature view: id map out of sync");
  if (!m.all_finite()) throw NumericError("feature view: NaN/Inf entry");
  if (kind == FeatureKind::output && pool &&
      pool->task == TaskKind::classification) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double sum = 0.0;
      for (double v : m.row(r)) {
        if (v < 0.0) throw NumericError("output view: negative probability");
        sum += v;
      }
      if (std::fabs(sum - 1.0) > 1e-6)
        throw NumericError("output view: row does not sum to 1");
    }
  }
}

FeatureView make_feature_view(const Pool& pool, FeatureKind kind,
                              const ModelOracle* model,
                              const std::vector<int>& items, int pad_len,
                              int pad_id) {
  if (pad_len < 1) throw ConfigError("make_feature_view: pad_len must be >= 1");

  std::vector<int> ids = items;
  if (ids.empty()) {
    ids.resize(pool.items.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  }
  for (int id : ids)
    if (id < 0 || id >= static_cast<int>(pool.items.size()))
      throw ConfigError("make_feature_view: item id out of range");

  FeatureView view;
  view.kind = kind;
  view.item_ids = ids;

  if (kind == FeatureKind::token) {
    view.m = Matrix(ids.size(), static_cast<std::size_t>(pad_len),
                    static_cast<double>(pad_id));
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const auto& tokens = pool.items[static_cast<std::size_t>(ids[r])].tokens;
      const std::size_t copy =
          std::min(tokens.size(), static_cast<std::size_t>(pad_len));
      for (std::size_t c = 0; c < copy; ++c)
        view.m.at(r, c) = static_cast<double>(tokens[c]);
    }
  } else {
    if (model == nullptr)
      throw ConfigError("make_feature_view: " + to_string(kind) +
                        " view requires a model");
    if (!model->is_trained())
      throw ConfigError("make_feature_view: model is not trained");
    view.m = kind == FeatureKind::embedding ? model->embed(pool, ids)
                                            : model->output_view(pool, ids);
  }

  view.validate(&pool);
  return view;
}

}  // namespace alkit
