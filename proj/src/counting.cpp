#include "densind/counting.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <thread>

namespace densind {

namespace {

constexpr std::size_t kChunkWords = kChunkBits / kWordBits;

// Produces the output bit rows for one chunk from the filled input rows.
using ChunkKernel = std::function<void(const std::vector<std::vector<Word>>& inputs, std::size_t words,
                                       std::vector<std::vector<Word>>& outputs)>;

void check_checkpoints(std::span<const std::uint64_t> checkpoints) {
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw std::invalid_argument("checkpoints must be nondecreasing");
  }
}

// interval j covers [checkpoints[j-1], checkpoints[j]) with checkpoints[-1] = 0.
void add_chunk(std::uint64_t chunk_begin, std::uint64_t chunk_len, std::span<const std::uint64_t> checkpoints,
               const std::vector<std::vector<Word>>& rows, std::vector<std::vector<std::uint64_t>>& acc) {
  const std::uint64_t chunk_end = chunk_begin + chunk_len;
  auto it = std::upper_bound(checkpoints.begin(), checkpoints.end(), chunk_begin);
  for (std::size_t j = static_cast<std::size_t>(it - checkpoints.begin()); j < checkpoints.size(); ++j) {
    const std::uint64_t lo = std::max(j == 0 ? 0 : checkpoints[j - 1], chunk_begin);
    const std::uint64_t hi = std::min(checkpoints[j], chunk_end);
    if (lo < hi) {
      for (std::size_t r = 0; r < rows.size(); ++r) {
        acc[r][j] += popcount_range(rows[r], lo - chunk_begin, hi - chunk_begin);
      }
    }
    if (checkpoints[j] >= chunk_end) break;
  }
}

std::vector<std::vector<std::uint64_t>> run_sweep(std::span<const OmegaSet> inputs, std::size_t outputs,
                                                  std::span<const std::uint64_t> checkpoints, unsigned workers,
                                                  const ChunkKernel& kernel) {
  check_checkpoints(checkpoints);
  std::vector<std::vector<std::uint64_t>> totals(outputs, std::vector<std::uint64_t>(checkpoints.size(), 0));
  if (checkpoints.empty() || checkpoints.back() == 0) return totals;

  const std::uint64_t limit = checkpoints.back();
  const std::uint64_t chunks = limit / kChunkBits + (limit % kChunkBits != 0);
  const unsigned used = static_cast<unsigned>(std::clamp<std::uint64_t>(workers == 0 ? 1 : workers, 1, chunks));

  std::vector<std::vector<std::vector<std::uint64_t>>> partial(
      used, std::vector<std::vector<std::uint64_t>>(outputs, std::vector<std::uint64_t>(checkpoints.size(), 0)));

  auto work = [&](unsigned w) {
    const std::uint64_t first = chunks * w / used;
    const std::uint64_t last = chunks * (w + 1) / used;
    std::vector<std::vector<Word>> in(inputs.size(), std::vector<Word>(kChunkWords));
    std::vector<std::vector<Word>> out(outputs, std::vector<Word>(kChunkWords));
    for (std::uint64_t c = first; c < last; ++c) {
      const std::uint64_t begin = c * kChunkBits;
      const std::uint64_t len = std::min(kChunkBits, limit - begin);
      const std::size_t words = len / kWordBits + (len % kWordBits != 0);
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        inputs[i].fill(begin, std::span<Word>(in[i]).first(words));
      }
      kernel(in, words, out);
      add_chunk(begin, len, checkpoints, out, partial[w]);
    }
  };

  if (used == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(used);
    for (unsigned w = 0; w < used; ++w) threads.emplace_back(work, w);
  }

  for (const auto& p : partial) {
    for (std::size_t r = 0; r < outputs; ++r) {
      for (std::size_t j = 0; j < checkpoints.size(); ++j) totals[r][j] += p[r][j];
    }
  }
  for (auto& row : totals) {
    for (std::size_t j = 1; j < row.size(); ++j) row[j] += row[j - 1];
  }
  return totals;
}

}  // namespace

std::vector<std::uint64_t> sweep_counts(const OmegaSet& s, std::span<const std::uint64_t> checkpoints,
                                        unsigned workers) {
  const OmegaSet sets[] = {s};
  return sweep_counts(sets, checkpoints, workers).front();
}

std::vector<std::vector<std::uint64_t>> sweep_counts(std::span<const OmegaSet> sets,
                                                     std::span<const std::uint64_t> checkpoints,
                                                     unsigned workers) {
  return run_sweep(sets, sets.size(), checkpoints, workers,
                   [](const auto& in, std::size_t words, auto& out) {
                     for (std::size_t i = 0; i < in.size(); ++i) {
                       std::copy_n(in[i].begin(), words, out[i].begin());
                     }
                   });
}

std::vector<std::vector<std::uint64_t>> atom_sweep_counts(std::span<const OmegaSet> members,
                                                          std::span<const std::uint64_t> checkpoints,
                                                          unsigned workers) {
  const std::size_t k = members.size();
  if (k >= 20) throw std::invalid_argument("too many members for an atom sweep");
  const std::size_t atoms = std::size_t{1} << k;
  return run_sweep(members, atoms, checkpoints, workers,
                   [k, atoms](const auto& in, std::size_t words, auto& out) {
                     for (std::size_t sigma = 0; sigma < atoms; ++sigma) {
                       for (std::size_t w = 0; w < words; ++w) {
                         Word acc = ~Word{0};
                         for (std::size_t i = 0; i < k; ++i) {
                           acc &= ((sigma >> i) & 1) ? in[i][w] : ~in[i][w];
                         }
                         out[sigma][w] = acc;
                       }
                     }
                   });
}

}  // namespace densind
