#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alkit/common.hpp"

namespace alkit {

enum class TaskKind { classification, sequence_generation };
enum class Split { train, test };

std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

// One corpus item. `label` holds the oracle answer: a class index for
// classification or a reference token sequence for generation. Acquisition
// code must not look at it until the item is moved to the labeled set.
struct PoolItem {
  int id = 0;  // contiguous 0..n-1 after load
  std::vector<int> tokens;
  int class_label = -1;
  std::vector<int> reference;
  Split split = Split::train;

  bool operator==(const PoolItem&) const = default;
};

// The labeled/unlabeled corpus. Immutable after load; safe for concurrent
// reads.
struct Pool {
  TaskKind task = TaskKind::classification;
  int vocab_size = 0;
  int num_classes = 0;  // classification only
  std::vector<PoolItem> items;
  std::vector<long long> original_ids;  // side map, parallel to items

  std::vector<int> train_indices() const;
  std::vector<int> test_indices() const;

  // Asserts the type invariants; throws ConfigError on violation.
  void validate() const;
};

// Reads one JSON object per line:
//   {"id": int, "tokens": [int], "label": int | [int], "split": "train"|"test"}
// Items are re-indexed to contiguous ids; the file's ids land in
// Pool::original_ids. Pass vocab_size/num_classes as 0 to infer them from
// the data (a warning is emitted).
Pool load_pool(const std::string& path, TaskKind task, int vocab_size = 0,
               int num_classes = 0);

// Inverse of load_pool for validated pools; writes original ids back.
void save_pool(const Pool& pool, const std::string& path);

}  // namespace alkit
