#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>

#include "treejudge/core/document.hpp"
#include "treejudge/core/error.hpp"

namespace treejudge::judgment {

// Receives one audit record per model exchange. Implementations must be
// safe to call from several threads.
class TranscriptSink {
 public:
  virtual ~TranscriptSink() = default;
  virtual void record(const std::string& label, const Json& exchange) = 0;
};

class MemoryTranscripts : public TranscriptSink {
 public:
  void record(const std::string& label, const Json& exchange) override {
    std::lock_guard lock(mu_);
    records_[label] = exchange;
  }

  std::map<std::string, Json> records() const {
    std::lock_guard lock(mu_);
    return records_;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, Json> records_;
};

// Writes <dir>/<label>.json. Labels are unique per run, so files from
// concurrent calls never collide.
class DirectoryTranscripts : public TranscriptSink {
 public:
  explicit DirectoryTranscripts(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw StorageError("cannot create transcript dir " + dir_.string() + ": " + ec.message());
  }

  void record(const std::string& label, const Json& exchange) override {
    write_file_atomic((dir_ / (label + ".json")).string(), to_canonical_text(exchange));
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace treejudge::judgment
