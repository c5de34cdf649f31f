#include "alkit/pool.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace alkit {

using nlohmann::json;

std::string to_string(TaskKind k) {
  return k == TaskKind::classification ? "classification" : "sequence_generation";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "classification") return TaskKind::classification;
  if (s == "sequence_generation" || s == "sequence" || s == "generation")
    return TaskKind::sequence_generation;
  throw ConfigError("unknown task kind: " + s);
}

std::vector<int> Pool::train_indices() const {
  std::vector<int> out;
  for (const auto& it : items)
    if (it.split == Split::train) out.push_back(it.id);
  return out;
}

std::vector<int> Pool::test_indices() const {
  std::vector<int> out;
  for (const auto& it : items)
    if (it.split == Split::test) out.push_back(it.id);
  return out;
}

void Pool::validate() const {
  if (vocab_size <= 0) throw ConfigError("pool: vocab_size must be positive");
  if (task == TaskKind::classification && num_classes <= 0)
    throw ConfigError("pool: num_classes must be positive for classification");
  if (original_ids.size() != items.size())
    throw ConfigError("pool: original id map out of sync");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    if (it.id != static_cast<int>(i))
      throw ConfigError("pool: ids not contiguous after load");
    if (it.tokens.empty()) throw ConfigError("pool: empty token sequence");
    for (int t : it.tokens)
      if (t < 0 || t >= vocab_size)
        throw ConfigError("pool: token out of vocab range");
    if (task == TaskKind::classification) {
      if (it.class_label < 0 || it.class_label >= num_classes)
        throw ConfigError("pool: class label out of range");
    } else {
      if (it.reference.empty())
        throw ConfigError("pool: empty reference sequence");
      for (int t : it.reference)
        if (t < 0 || t >= vocab_size)
          throw ConfigError("pool: reference token out of vocab range");
    }
  }
}

namespace {

struct RawItem {
  long long original_id;
  std::vector<int> tokens;
  int class_label = -1;
  std::vector<int> reference;
  Split split;
  int line_no = 0;
};

std::vector<int> to_int_vector(const json& arr, int line_no, const char* what) {
  if (!arr.is_array())
    throw ConfigError("malformed line at line " + std::to_string(line_no) +
                      ": " + what + " must be an array of integers");
  std::vector<int> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_integer())
      throw ConfigError("malformed line at line " + std::to_string(line_no) +
                        ": " + what + " must be an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

Pool load_pool(const std::string& path, TaskKind task, int vocab_size,
               int num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pool file: " + path);

  std::vector<RawItem> raw;
  std::unordered_set<long long> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("malformed line at line " + std::to_string(line_no) +
                        ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("tokens") ||
        !obj.contains("label") || !obj.contains("split"))
      throw ConfigError("malformed line at line " + std::to_string(line_no) +
                        ": expected fields id, tokens, label, split");

    RawItem item;
    item.line_no = line_no;
    if (!obj["id"].is_number_integer())
      throw ConfigError("malformed line at line " + std::to_string(line_no) +
                        ": id must be an integer");
    item.original_id = obj["id"].get<long long>();
    if (!seen_ids.insert(item.original_id).second)
      throw ConfigError("duplicate id " + std::to_string(item.original_id) +
                        " at line " + std::to_string(line_no));

    item.tokens = to_int_vector(obj["tokens"], line_no, "tokens");
    if (item.tokens.empty())
      throw ConfigError("empty token sequence at line " +
                        std::to_string(line_no));

    if (task == TaskKind::classification) {
      if (!obj["label"].is_number_integer())
        throw ConfigError("malformed line at line " + std::to_string(line_no) +
                          ": label must be a class index");
      item.class_label = obj["label"].get<int>();
    } else {
      item.reference = to_int_vector(obj["label"], line_no, "label");
      if (item.reference.empty())
        throw ConfigError("empty reference at line " + std::to_string(line_no));
    }

    const std::string split = obj["split"].get<std::string>();
    if (split == "train")
      item.split = Split::train;
    else if (split == "test")
      item.split = Split::test;
    else
      throw ConfigError("malformed line at line " + std::to_string(line_no) +
                        ": split must be \"train\" or \"test\"");
    raw.push_back(std::move(item));
  }
  if (raw.empty()) throw ConfigError("pool file is empty: " + path);

  if (vocab_size <= 0) {
    int max_tok = 0;
    for (const auto& it : raw) {
      for (int t : it.tokens) max_tok = std::max(max_tok, t);
      for (int t : it.reference) max_tok = std::max(max_tok, t);
    }
    vocab_size = max_tok + 1;
    warn("pool: vocab_size not given, inferred " + std::to_string(vocab_size));
  }
  if (task == TaskKind::classification && num_classes <= 0) {
    int max_label = 0;
    for (const auto& it : raw) max_label = std::max(max_label, it.class_label);
    num_classes = max_label + 1;
    warn("pool: num_classes not given, inferred " + std::to_string(num_classes));
  }

  Pool pool;
  pool.task = task;
  pool.vocab_size = vocab_size;
  pool.num_classes = task == TaskKind::classification ? num_classes : 0;
  pool.items.reserve(raw.size());
  pool.original_ids.reserve(raw.size());

  // Second pass: range checks reported with the source line number.
  int next_id = 0;
  for (const auto& it : raw) {
    const int this_line = it.line_no;
    for (int t : it.tokens)
      if (t < 0 || t >= vocab_size)
        throw ConfigError("token out of range at line " +
                          std::to_string(this_line) + ": " + std::to_string(t) +
                          " not in [0, " + std::to_string(vocab_size) + ")");
    if (task == TaskKind::classification) {
      if (it.class_label < 0 || it.class_label >= num_classes)
        throw ConfigError("label out of range at line " +
                          std::to_string(this_line) + ": " +
                          std::to_string(it.class_label));
    } else {
      for (int t : it.reference)
        if (t < 0 || t >= vocab_size)
          throw ConfigError("token out of range at line " +
                            std::to_string(this_line) + ": " +
                            std::to_string(t) + " not in [0, " +
                            std::to_string(vocab_size) + ") (reference)");
    }
    PoolItem item;
    item.id = next_id++;
    item.tokens = it.tokens;
    item.class_label = it.class_label;
    item.reference = it.reference;
    item.split = it.split;
    pool.items.push_back(std::move(item));
    pool.original_ids.push_back(it.original_id);
  }

  pool.validate();
  return pool;
}

void save_pool(const Pool& pool, const std::string& path) {
  pool.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pool file: " + path);
  for (std::size_t i = 0; i < pool.items.size(); ++i) {
    const auto& it = pool.items[i];
    json obj;
    obj["id"] = pool.original_ids[i];
    obj["tokens"] = it.tokens;
    if (pool.task == TaskKind::classification)
      obj["label"] = it.class_label;
    else
      obj["label"] = it.reference;
    obj["split"] = it.split == Split::train ? "train" : "test";
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace alkit
