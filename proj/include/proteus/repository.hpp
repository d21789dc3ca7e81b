#pragma once

// In-memory advertisement store with an inverted filter index and optional
// line-record persistence.  Writers replace a broker's advertisements as one
// atomic batch; readers always observe a complete pre- or post-batch state.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "proteus/model.hpp"

namespace proteus::repository {

class Repository {
public:
    // Volatile store; nothing is written to disk.
    Repository() = default;

    // Binds the store to `store_path`.  If the file exists it is loaded;
    // afterwards every successful upsert rewrites it atomically.
    explicit Repository(const std::string& store_path);

    Repository(const Repository&) = delete;
    Repository& operator=(const Repository&) = delete;

    // Replaces broker_id's advertisements with `batch` (empty batch removes
    // them all but keeps the broker known).  When a store file is bound the
    // new state is persisted before it becomes visible; a persistence
    // failure throws StorageError and leaves memory and file unchanged.
    // Every advertisement must carry source_broker_id == broker_id.
    void upsert_broker_batch(const std::string& broker_id,
                             std::vector<model::ServiceAdvertisement> batch);

    // Conjunctive exact-match retrieval over filter attributes.  Empty
    // `filters` matches everything; non-empty `targets` restricts results to
    // those source brokers.  Results are ordered by advertisement id.
    // Throws UnknownFilterName for names outside the filter vocabulary.
    std::vector<model::ServiceAdvertisement> retrieve(
        const std::vector<model::SearchFilter>& filters,
        const std::vector<std::string>& targets) const;

    std::optional<model::ServiceAdvertisement> find(const std::string& advertisement_id) const;

    std::size_t size() const;

    // Brokers that have been upserted at least once, empty batches included.
    // After a cold load only brokers with stored advertisements are known;
    // the crawler re-registers the rest on its first pass.
    std::vector<std::string> broker_ids() const;
    bool has_broker(const std::string& broker_id) const;

    // Writes the current state to `path` as one encoded advertisement per
    // line, ordered by id, via a temp-file rename.  Throws StorageError.
    void snapshot(const std::string& path) const;

    // Replaces the in-memory state with the records in `path`.  Throws
    // StorageError if the file cannot be read and DecodeError (naming the
    // line) on a corrupt record; the previous state survives either failure.
    void load(const std::string& path);

    const std::string& store_path() const { return store_path_; }

private:
    struct State {
        // Advertisements by id; map order doubles as retrieval order.
        std::map<std::string, model::ServiceAdvertisement> ads;
        // Broker id -> its advertisement ids.  An empty set marks a broker
        // that was crawled but currently publishes nothing.
        std::map<std::string, std::set<std::string>> brokers;
        // Inverted index: (attribute name, value) -> advertisement ids.
        std::map<std::pair<std::string, std::string>, std::set<std::string>> postings;
    };

    std::shared_ptr<const State> current() const;
    void publish(std::shared_ptr<const State> next);
    static void reindex(State& state);
    static void write_records(const State& state, const std::string& path);
    static std::shared_ptr<State> read_records(const std::string& path);

    mutable std::shared_mutex mutex_;              // guards state_
    std::mutex write_mutex_;                       // serializes writers
    std::shared_ptr<const State> state_ = std::make_shared<State>();
    std::string store_path_;                       // empty = volatile
};

}  // namespace proteus::repository
