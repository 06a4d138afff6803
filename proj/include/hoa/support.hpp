#pragma once

// Small runtime helpers: content digests, reject logging, a bounded
// producer/consumer queue and chunked data parallelism.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "hoa/core_model.hpp"
#include "hoa/csv.hpp"

namespace hoa {

/// 64-bit FNV-1a; stable across platforms, used for artifact digests.
class Digest {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      h_ ^= c;
      h_ *= 1099511628211ULL;
    }
  }
  std::uint64_t value() const { return h_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

inline std::uint64_t fingerprint(std::string_view s) {
  Digest d;
  d.update(s);
  return d.value();
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
  Digest d;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    d.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return d.hex();
}

struct Reject {
  std::string file;
  std::size_t line = 0;
  Errc reason = Errc::SchemaViolation;
  std::string detail;
  std::string raw;
};

/// Collects rejected input lines. When bound to a stream, entries are
/// written through immediately and only counted, so memory stays flat on
/// large inputs.
class RejectLog {
 public:
  RejectLog() = default;
  explicit RejectLog(std::ostream& sink) : sink_(&sink) { write_header(); }

  void add(Reject r) {
    ++count_;
    if (sink_) {
      csv::write_row(*sink_, {r.file, std::to_string(r.line), std::string(errc_name(r.reason)),
                              r.detail, r.raw});
    } else {
      entries_.push_back(std::move(r));
    }
  }

  void add(std::string_view file, std::size_t line, const Error& e, std::string_view raw) {
    add(Reject{std::string(file), line, e.code(), e.message(), std::string(raw)});
  }

  std::size_t count() const { return count_; }
  const std::vector<Reject>& entries() const { return entries_; }

  std::size_t count(Errc reason) const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.reason == reason;
    return n;
  }

  void write(std::ostream& os) const {
    csv::write_row(os, {"file", "line", "reason", "detail", "raw"});
    for (const auto& r : entries_)
      csv::write_row(os, {r.file, std::to_string(r.line), std::string(errc_name(r.reason)), r.detail,
                          r.raw});
  }

 private:
  void write_header() { csv::write_row(*sink_, {"file", "line", "reason", "detail", "raw"}); }

  std::ostream* sink_ = nullptr;
  std::vector<Reject> entries_;
  std::size_t count_ = 0;
};

/// Bounded multi-producer queue. push() blocks while full; pop() returns
/// nullopt once the queue is closed and drained.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    high_water_ = std::max(high_water_, items_.size());
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t high_water() const {
    std::lock_guard lock(mu_);
    return high_water_;
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::deque<T> items_;
  std::size_t high_water_ = 0;
  bool closed_ = false;
};

inline unsigned default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n ? n : 1;
}

/// Splits [0, n) into `workers` contiguous shards and runs fn(shard, begin,
/// end) on each. Shard boundaries depend only on n and workers, so callers
/// merging per-shard results in shard order get worker-count-invariant
/// output as long as the merge is order-insensitive or concatenative.
template <typename Fn>
void parallel_shards(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::size_t shards = std::min<std::size_t>(workers, n);
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(shards);
  for (std::size_t s = 0; s < shards; ++s) {
    std::size_t begin = n * s / shards, end = n * (s + 1) / shards;
    threads.emplace_back([&, s, begin, end] {
      try {
        fn(s, begin, end);
      } catch (...) {
        errors[s] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::size_t shard_count(std::size_t n, unsigned workers) {
  if (workers <= 1 || n < 2) return 1;
  return std::min<std::size_t>(workers, n);
}

}  // namespace hoa
