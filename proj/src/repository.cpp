#include "proteus/repository.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "proteus/advert_codec.hpp"
#include "proteus/errors.hpp"

namespace proteus::repository {

namespace {

// Intersects `acc` with `next` in place.
void intersect(std::set<std::string>& acc, const std::set<std::string>& next) {
    for (auto it = acc.begin(); it != acc.end();) {
        if (next.count(*it) == 0) {
            it = acc.erase(it);
        } else {
            ++it;
        }
    }
}

}  // namespace

Repository::Repository(const std::string& store_path) : store_path_(store_path) {
    std::ifstream probe(store_path);
    if (probe.good()) {
        state_ = read_records(store_path);
    }
}

std::shared_ptr<const Repository::State> Repository::current() const {
    std::shared_lock lock(mutex_);
    return state_;
}

void Repository::publish(std::shared_ptr<const State> next) {
    std::unique_lock lock(mutex_);
    state_ = std::move(next);
}

void Repository::reindex(State& state) {
    state.postings.clear();
    for (const auto& [id, ad] : state.ads) {
        for (const auto& [name, value] : ad.filter_attributes) {
            state.postings[{name, value}].insert(id);
        }
    }
}

void Repository::upsert_broker_batch(const std::string& broker_id,
                                     std::vector<model::ServiceAdvertisement> batch) {
    for (const auto& ad : batch) {
        if (ad.source_broker_id != broker_id) {
            throw std::logic_error("advertisement '" + ad.id + "' carries sourceBrokerId '" +
                                   ad.source_broker_id + "', expected '" + broker_id + "'");
        }
        model::validate_advertisement(ad);
    }

    std::lock_guard writer(write_mutex_);

    auto next = std::make_shared<State>(*current());
    auto& ids = next->brokers[broker_id];
    for (const auto& id : ids) {
        next->ads.erase(id);
    }
    ids.clear();
    for (auto& ad : batch) {
        ids.insert(ad.id);
        next->ads[ad.id] = std::move(ad);
    }
    reindex(*next);

    if (!store_path_.empty()) {
        write_records(*next, store_path_);  // throws StorageError; memory untouched
    }
    publish(std::move(next));
}

std::vector<model::ServiceAdvertisement> Repository::retrieve(
    const std::vector<model::SearchFilter>& filters,
    const std::vector<std::string>& targets) const {
    const auto& vocabulary = model::default_filter_vocabulary();
    for (const auto& filter : filters) {
        if (vocabulary.count(filter.name) == 0) {
            throw UnknownFilterName("unknown filter '" + filter.name + "'");
        }
    }

    auto state = current();

    std::set<std::string> candidates;
    if (filters.empty()) {
        for (const auto& [id, ad] : state->ads) {
            candidates.insert(id);
        }
    } else {
        bool first = true;
        for (const auto& filter : filters) {
            auto posting = state->postings.find({filter.name, filter.value});
            if (posting == state->postings.end()) {
                return {};
            }
            if (first) {
                candidates = posting->second;
                first = false;
            } else {
                intersect(candidates, posting->second);
            }
            if (candidates.empty()) {
                return {};
            }
        }
    }

    const std::set<std::string> wanted_brokers(targets.begin(), targets.end());
    std::vector<model::ServiceAdvertisement> result;
    result.reserve(candidates.size());
    for (const auto& id : candidates) {
        const auto& ad = state->ads.at(id);
        if (!wanted_brokers.empty() && wanted_brokers.count(ad.source_broker_id) == 0) {
            continue;
        }
        result.push_back(ad);
    }
    return result;
}

std::optional<model::ServiceAdvertisement> Repository::find(
    const std::string& advertisement_id) const {
    auto state = current();
    auto it = state->ads.find(advertisement_id);
    if (it == state->ads.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t Repository::size() const { return current()->ads.size(); }

std::vector<std::string> Repository::broker_ids() const {
    auto state = current();
    std::vector<std::string> ids;
    ids.reserve(state->brokers.size());
    for (const auto& [id, ads] : state->brokers) {
        ids.push_back(id);
    }
    return ids;
}

bool Repository::has_broker(const std::string& broker_id) const {
    return current()->brokers.count(broker_id) > 0;
}

void Repository::write_records(const State& state, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw StorageError("cannot open '" + tmp + "' for writing");
        }
        for (const auto& [id, ad] : state.ads) {
            out << model::encode_advertisement(ad) << '\n';
        }
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw StorageError("write to '" + tmp + "' failed");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        const std::string reason = std::strerror(errno);
        std::remove(tmp.c_str());
        throw StorageError("rename '" + tmp + "' -> '" + path + "' failed: " + reason);
    }
}

std::shared_ptr<Repository::State> Repository::read_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StorageError("cannot open '" + path + "' for reading");
    }
    auto state = std::make_shared<State>();
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        auto ad = model::decode_advertisement(line, line_number);
        state->brokers[ad.source_broker_id].insert(ad.id);
        state->ads[ad.id] = std::move(ad);
    }
    reindex(*state);
    return state;
}

void Repository::snapshot(const std::string& path) const { write_records(*current(), path); }

void Repository::load(const std::string& path) {
    std::lock_guard writer(write_mutex_);
    publish(read_records(path));
}

}  // namespace proteus::repository
