#pragma once

#include <map>
#include <string>
#include <vector>

namespace promptlab {

/// Name -> entry map shared by the dataset, rulebook, method, metric and
/// candidate-provider registries. Adding a component means adding one entry;
/// nothing else in the pipeline changes.
template <class T>
class Registry {
public:
    void add(const std::string& name, T entry) { entries_.insert_or_assign(name, std::move(entry)); }

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    const T* find(const std::string& name) const {
        auto it = entries_.find(name);
        return it == entries_.end() ? nullptr : &it->second;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto& [name, _] : entries_) out.push_back(name);
        return out;
    }

    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, T> entries_;
};

} // namespace promptlab
