#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treejudge/core/document.hpp"
#include "treejudge/core/error.hpp"
#include "treejudge/core/hash.hpp"

namespace treejudge::cache {

inline constexpr const char* kEntrySchema = "treejudge.cache-entry/1";

enum class ContentKind { html, pdf, unreachable };

inline std::string_view to_string(ContentKind k) {
  switch (k) {
    case ContentKind::html: return "html";
    case ContentKind::pdf: return "pdf";
    case ContentKind::unreachable: return "unreachable";
  }
  return "?";
}

inline ContentKind parse_content_kind(const std::string& s) {
  if (s == "html") return ContentKind::html;
  if (s == "pdf") return ContentKind::pdf;
  if (s == "unreachable") return ContentKind::unreachable;
  throw DocumentError("unknown content kind '" + s + "'");
}

// Who replaced an entry by hand, and when.
struct ManualProvenance {
  std::string annotator;
  std::string replaced_at;
  std::string note;

  friend bool operator==(const ManualProvenance&, const ManualProvenance&) = default;
};

// Archived evidence for one normalized URL. Screenshots are PNG bytes,
// top-to-bottom.
struct CacheEntry {
  std::string key;
  std::vector<std::string> original_urls;
  std::string final_url;
  std::string fetched_at;
  int http_status = 0;
  ContentKind kind = ContentKind::unreachable;
  std::string content_type;
  std::string text;
  std::vector<std::string> screenshots;
  bool blocked = false;
  bool manual = false;
  std::optional<ManualProvenance> provenance;
  std::string failure;  // why the page is unreachable or blocked
  int version = 1;

  // Whether a verifier may read this entry as evidence.
  bool usable() const { return kind != ContentKind::unreachable && (!blocked || manual); }

  friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

// Directory-backed store. Layout under the root:
//   entries/<sha256(key)>/entry.json, text.txt, shot_000.png, ...
//   entries/<sha256(key)>/history/v<N>/...   (versions replaced by hand)
// Callers serialize writes per key; reads of other keys never block.
class CacheStore {
 public:
  explicit CacheStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / "entries", ec);
    if (ec) throw StorageError("cannot create cache root " + root_.string() + ": " + ec.message());
  }

  const std::filesystem::path& root() const { return root_; }

  std::filesystem::path entry_dir(std::string_view key) const { return root_ / "entries" / sha256_hex(key); }

  bool contains(std::string_view key) const { return std::filesystem::exists(entry_dir(key) / "entry.json"); }

  std::optional<CacheEntry> get(std::string_view key) const {
    auto dir = entry_dir(key);
    if (!std::filesystem::exists(dir / "entry.json")) return std::nullopt;
    return read_entry(dir);
  }

  void put(const CacheEntry& entry) { write_entry(entry_dir(entry.key), entry); }

  // Moves the current version into history/ and returns its location.
  std::filesystem::path archive_current(std::string_view key) {
    auto dir = entry_dir(key);
    auto current = get(key);
    if (!current) throw StorageError("no entry to archive for " + std::string(key));
    auto dest = dir / "history" / ("v" + std::to_string(current->version));
    write_entry(dest, *current);
    return dest;
  }

  std::vector<CacheEntry> history(std::string_view key) const {
    std::vector<CacheEntry> out;
    auto dir = entry_dir(key) / "history";
    if (!std::filesystem::exists(dir)) return out;
    for (int v = 1;; ++v) {
      auto d = dir / ("v" + std::to_string(v));
      if (!std::filesystem::exists(d / "entry.json")) break;
      out.push_back(read_entry(d));
    }
    return out;
  }

  // Paths of the stored screenshots, relative to the cache root.
  std::vector<std::string> screenshot_paths(const CacheEntry& entry) const {
    std::vector<std::string> out;
    auto rel = std::filesystem::path("entries") / sha256_hex(entry.key);
    for (std::size_t i = 0; i < entry.screenshots.size(); ++i) out.push_back((rel / shot_name(i)).generic_string());
    return out;
  }

  std::string text_path(const CacheEntry& entry) const {
    return (std::filesystem::path("entries") / sha256_hex(entry.key) / "text.txt").generic_string();
  }

  static Json entry_metadata(const CacheEntry& e) {
    Json j;
    j["schema"] = kEntrySchema;
    j["key"] = e.key;
    j["original_urls"] = e.original_urls;
    j["final_url"] = e.final_url;
    j["fetched_at"] = e.fetched_at;
    j["http_status"] = e.http_status;
    j["kind"] = std::string(to_string(e.kind));
    j["content_type"] = e.content_type;
    j["blocked"] = e.blocked;
    j["manual"] = e.manual;
    j["failure"] = e.failure;
    j["version"] = e.version;
    j["text"] = {{"file", "text.txt"}, {"sha256", sha256_hex(e.text)}, {"bytes", e.text.size()}};
    Json shots = Json::array();
    for (std::size_t i = 0; i < e.screenshots.size(); ++i) {
      shots.push_back({{"file", shot_name(i)}, {"sha256", sha256_hex(e.screenshots[i])}});
    }
    j["screenshots"] = std::move(shots);
    if (e.provenance) {
      j["provenance"] = {{"annotator", e.provenance->annotator},
                         {"replaced_at", e.provenance->replaced_at},
                         {"note", e.provenance->note}};
    } else {
      j["provenance"] = nullptr;
    }
    return j;
  }

 private:
  static std::string shot_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "shot_%03zu.png", i);
    return buf;
  }

  static void write_entry(const std::filesystem::path& dir, const CacheEntry& e) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw StorageError("cannot create " + dir.string() + ": " + ec.message());
    // Drop stale screenshots from a previous version with more tiles.
    for (std::size_t i = e.screenshots.size();; ++i) {
      auto stale = dir / shot_name(i);
      if (!std::filesystem::exists(stale)) break;
      std::filesystem::remove(stale, ec);
    }
    write_file_atomic((dir / "text.txt").string(), e.text);
    for (std::size_t i = 0; i < e.screenshots.size(); ++i) {
      write_file_atomic((dir / shot_name(i)).string(), e.screenshots[i]);
    }
    // Metadata last: an entry exists once entry.json does.
    write_file_atomic((dir / "entry.json").string(), to_canonical_text(entry_metadata(e)));
  }

  static CacheEntry read_entry(const std::filesystem::path& dir) {
    auto j = parse_document(read_file((dir / "entry.json").string()));
    require_schema(j, kEntrySchema);
    CacheEntry e;
    try {
      e.key = j.at("key").get<std::string>();
      e.original_urls = j.at("original_urls").get<std::vector<std::string>>();
      e.final_url = j.at("final_url").get<std::string>();
      e.fetched_at = j.at("fetched_at").get<std::string>();
      e.http_status = j.at("http_status").get<int>();
      e.kind = parse_content_kind(j.at("kind").get<std::string>());
      e.content_type = j.at("content_type").get<std::string>();
      e.blocked = j.at("blocked").get<bool>();
      e.manual = j.at("manual").get<bool>();
      e.failure = j.at("failure").get<std::string>();
      e.version = j.at("version").get<int>();
      if (!j.at("provenance").is_null()) {
        const auto& p = j["provenance"];
        e.provenance = ManualProvenance{p.at("annotator").get<std::string>(), p.at("replaced_at").get<std::string>(),
                                        p.at("note").get<std::string>()};
      }
    } catch (const Json::exception& ex) {
      throw DocumentError(std::string("bad cache entry metadata: ") + ex.what());
    }
    e.text = read_file((dir / j["text"]["file"].get<std::string>()).string());
    if (sha256_hex(e.text) != j["text"]["sha256"]) throw StorageError("text digest mismatch in " + dir.string());
    for (const auto& s : j["screenshots"]) {
      auto bytes = read_file((dir / s["file"].get<std::string>()).string());
      if (sha256_hex(bytes) != s["sha256"]) throw StorageError("screenshot digest mismatch in " + dir.string());
      e.screenshots.push_back(std::move(bytes));
    }
    return e;
  }

  std::filesystem::path root_;
};

}  // namespace treejudge::cache
