#pragma once

#include <string>
#include <vector>

namespace veriform {

// One verified fact. `anchor` names the identity being replayed, `witness`
// holds a counterexample trace when the check fails.
struct CheckItem {
    std::string id;
    std::string anchor;
    bool pass = false;
    std::string witness;
};

struct VerificationReport {
    std::string suite;
    std::vector<CheckItem> items;

    bool pass() const {
        for (auto& it : items)
            if (!it.pass) return false;
        return true;
    }
    void add(std::string id, std::string anchor, bool ok, std::string witness = "") {
        items.push_back({std::move(id), std::move(anchor), ok, std::move(witness)});
    }
    void absorb(const VerificationReport& other) {
        items.insert(items.end(), other.items.begin(), other.items.end());
    }
};

}  // namespace veriform
