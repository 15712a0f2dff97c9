#pragma once

#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "treejudge/cache/renderer.hpp"
#include "treejudge/cache/store.hpp"
#include "treejudge/cache/url.hpp"
#include "treejudge/core/concurrency.hpp"

namespace treejudge::cache {

using Clock = std::function<std::string()>;

inline std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Read side used by verifiers.
class EvidenceProvider {
 public:
  virtual ~EvidenceProvider() = default;
  // Entry for a raw or normalized URL; nullopt when nothing is known.
  virtual std::optional<CacheEntry> evidence(const std::string& url) = 0;
};

struct ReplacementPayload {
  std::string text;
  std::vector<std::string> screenshots;  // PNG bytes
  std::string note;
  std::string annotator;
};

class PageCache : public EvidenceProvider {
 public:
  // `limiter` is the campaign-wide in-flight cap; may be null.
  PageCache(std::shared_ptr<CacheStore> store, std::shared_ptr<Renderer> renderer,
            ConcurrencyLimiter* limiter = nullptr, Clock clock = utc_now)
      : store_(std::move(store)), renderer_(std::move(renderer)), limiter_(limiter), clock_(std::move(clock)) {}

  CacheStore& store() { return *store_; }

  // Fetches and archives one URL unless an entry already exists. Manual
  // entries are never refetched. `original` is recorded among the entry's
  // raw spellings.
  CacheEntry fetch_and_cache(const std::string& url, const std::string& original = {}) {
    std::string key = normalize_url(url);
    std::string raw = original.empty() ? url : original;
    auto entry = flights_.run(key, [&] { return fetch_locked(key); });
    return remember_original(key, entry, {raw});
  }

  // Pre-fetches every collected URL with at most `parallelism` workers.
  std::vector<CacheEntry> prefetch(const UrlCollection& urls, std::size_t parallelism) {
    if (parallelism == 0) throw ConfigError("prefetch parallelism must be >= 1");
    std::vector<std::pair<std::string, std::vector<std::string>>> work(urls.begin(), urls.end());
    std::vector<CacheEntry> out(work.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < work.size();) {
        try {
          const auto& [key, originals] = work[i];
          auto entry = flights_.run(key, [&] { return fetch_locked(key); });
          out[i] = remember_original(key, entry, originals);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < std::min(parallelism, work.size()); ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
  }

  // Overwrites an entry with human-captured content; the previous version
  // moves to the entry's history.
  CacheEntry replace_entry(const std::string& url, const ReplacementPayload& payload) {
    std::string key = normalize_url(url);
    if (payload.text.find_first_not_of(" \t\r\n") == std::string::npos && payload.screenshots.empty()) {
      throw StorageError("replacement payload for " + key + " is empty");
    }
    if (payload.annotator.empty()) throw StorageError("replacement for " + key + " needs an annotator");
    std::lock_guard lock(key_mutex(key));
    auto current = store_->get(key);
    if (!current) throw StorageError("no cache entry for " + key);
    store_->archive_current(key);
    CacheEntry next = *current;
    next.text = payload.text;
    next.screenshots = payload.screenshots;
    next.blocked = false;
    next.manual = true;
    next.failure.clear();
    if (next.kind == ContentKind::unreachable) next.kind = ContentKind::html;
    next.provenance = ManualProvenance{payload.annotator, clock_(), payload.note};
    next.version = current->version + 1;
    store_->put(next);
    spdlog::info("replaced cache entry {} (version {})", key, next.version);
    return next;
  }

  std::optional<CacheEntry> lookup(const std::string& url) const {
    std::string key;
    try {
      key = normalize_url(url);
    } catch (const UrlError&) {
      return std::nullopt;
    }
    return store_->get(key);
  }

  // Missing evidence is fetched on demand with a warning; unparsable URLs
  // yield nothing.
  std::optional<CacheEntry> evidence(const std::string& url) override {
    if (auto hit = lookup(url)) return hit;
    try {
      spdlog::warn("evidence for {} was not pre-cached; fetching now", url);
      return fetch_and_cache(url);
    } catch (const UrlError&) {
      return std::nullopt;
    }
  }

  // Renderer invocations so far (for idempotence checks).
  std::size_t network_fetches() const { return fetches_.load(); }

 private:
  std::mutex& key_mutex(const std::string& key) {
    std::lock_guard lock(mu_);
    auto& m = key_mutexes_[key];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
  }

  CacheEntry fetch_locked(const std::string& key) {
    std::lock_guard lock(key_mutex(key));
    if (auto existing = store_->get(key)) return *existing;

    RenderResult r;
    {
      ConcurrencyLimiter::Slot slot(limiter_);
      ++fetches_;
      try {
        r = renderer_->render(key);
      } catch (const std::exception& e) {
        r = RenderResult{};
        r.failure = std::string("renderer error: ") + e.what();
      }
    }
    CacheEntry e;
    e.key = key;
    e.final_url = r.final_url.empty() ? key : r.final_url;
    e.fetched_at = clock_();
    e.http_status = r.http_status;
    e.content_type = r.content_type;
    if (!r.reachable) {
      e.kind = ContentKind::unreachable;
      e.failure = r.failure.empty() ? "rendering boundary unavailable" : r.failure;
    } else {
      e.kind = r.kind;
      e.failure = r.failure;
      if (auto why = detect_block(r)) {
        e.blocked = true;
        e.failure = "blocked: " + *why;
        if (e.kind == ContentKind::unreachable) e.kind = ContentKind::html;
      }
      if (e.kind != ContentKind::unreachable) {
        e.text = std::move(r.text);
        e.screenshots = std::move(r.screenshots);
      }
    }
    store_->put(e);
    if (e.blocked) {
      spdlog::warn("{} refused automated access ({})", key, e.failure);
    } else if (e.kind == ContentKind::unreachable) {
      spdlog::warn("{} unreachable: {}", key, e.failure);
    }
    return e;
  }

  CacheEntry remember_original(const std::string& key, CacheEntry entry, const std::vector<std::string>& raws) {
    std::lock_guard lock(key_mutex(key));
    auto latest = store_->get(key);
    if (latest) entry = *latest;
    bool changed = false;
    for (const auto& raw : raws) {
      if (std::find(entry.original_urls.begin(), entry.original_urls.end(), raw) == entry.original_urls.end()) {
        entry.original_urls.push_back(raw);
        changed = true;
      }
    }
    if (changed) store_->put(entry);
    return entry;
  }

  std::shared_ptr<CacheStore> store_;
  std::shared_ptr<Renderer> renderer_;
  ConcurrencyLimiter* limiter_;
  Clock clock_;
  SingleFlight<CacheEntry> flights_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> key_mutexes_;
  std::atomic<std::size_t> fetches_{0};
};

}  // namespace treejudge::cache
