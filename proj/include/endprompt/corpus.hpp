#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "endprompt/rng.hpp"

namespace eplab {

// Deterministic synthetic byte corpus: a stream of fixed-length documents in
// three flavors. Repeat documents carry a segment that recurs verbatim later
// in the document (a dense copy signal that only prefix-matching attention
// can exploit, since the repeat offset varies). Recall documents plant
// key/value pairs and later query them as "<sep><key>" followed by the
// value. The remainder is plain filler. Keys, values and segments are
// redrawn per document, so nothing is predictable across documents.
struct CorpusConfig {
    std::int64_t n_docs = 1000;
    int doc_len = 120;
    int key_len = 2;
    int value_len = 2;
    int n_pairs = 2;
    double repeat_fraction = 0.5;
    double recall_fraction = 0.35;  // remaining docs are pure filler
    std::string filler_alphabet = "abcdefghijklmnop";
    std::string separators = "!?;/";

    void validate() const {
        if (n_docs < 1 || doc_len < 16 || key_len < 1 || value_len < 1 || n_pairs < 1) {
            throw std::invalid_argument("CorpusConfig: degenerate sizes");
        }
        if (filler_alphabet.size() < 4 || separators.empty()) {
            throw std::invalid_argument("CorpusConfig: alphabets too small");
        }
        if (repeat_fraction < 0.0 || recall_fraction < 0.0 ||
            repeat_fraction + recall_fraction > 1.0) {
            throw std::invalid_argument("CorpusConfig: document-type fractions out of range");
        }
        const int needle = key_len + value_len;
        const int recall = 1 + key_len + value_len;
        if (n_pairs * (needle + recall) + 8 > doc_len) {
            throw std::invalid_argument("CorpusConfig: document too short for the episode count");
        }
    }
};

inline std::string synth_corpus(const CorpusConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    std::string corpus;
    corpus.reserve(static_cast<std::size_t>(config.n_docs) *
                   static_cast<std::size_t>(config.doc_len));

    const int needle_len = config.key_len + config.value_len;
    const int recall_len = 1 + config.key_len + config.value_len;

    for (std::int64_t doc = 0; doc < config.n_docs; ++doc) {
        std::string text(static_cast<std::size_t>(config.doc_len), '\0');
        const double flavor = rng.unit();
        if (flavor < config.repeat_fraction) {
            // Repeated-segment document: filler, segment, filler, segment, tail.
            for (char& c : text) {
                c = config.filler_alphabet[rng.index(config.filler_alphabet.size())];
            }
            const std::int64_t m = rng.uniform_int(config.doc_len / 4, config.doc_len * 2 / 5);
            std::string segment(static_cast<std::size_t>(m), '\0');
            for (char& c : segment) {
                c = config.filler_alphabet[rng.index(config.filler_alphabet.size())];
            }
            const std::int64_t slack = config.doc_len - 2 * m;
            std::int64_t cut1 = rng.uniform_int(0, slack);
            std::int64_t cut2 = rng.uniform_int(0, slack);
            if (cut1 > cut2) {
                std::swap(cut1, cut2);
            }
            text.replace(static_cast<std::size_t>(cut1), segment.size(), segment);
            text.replace(static_cast<std::size_t>(cut2 + m), segment.size(), segment);
            corpus += text;
            continue;
        }
        const bool with_recall = flavor < config.repeat_fraction + config.recall_fraction;

        struct Pair {
            std::string key, value;
        };
        std::vector<Pair> pairs;
        std::string excluded;
        if (with_recall) {
            for (int p = 0; p < config.n_pairs; ++p) {
                Pair pair;
                do {
                    pair.key.clear();
                    for (int i = 0; i < config.key_len; ++i) {
                        pair.key += config.filler_alphabet[rng.index(config.filler_alphabet.size())];
                    }
                } while (std::any_of(pairs.begin(), pairs.end(),
                                     [&](const Pair& other) { return other.key == pair.key; }));
                for (int i = 0; i < config.value_len; ++i) {
                    pair.value += config.filler_alphabet[rng.index(config.filler_alphabet.size())];
                }
                excluded += pair.key;
                excluded += pair.value;
                pairs.push_back(std::move(pair));
            }
        }

        std::string filler_pool;
        for (char c : config.filler_alphabet) {
            if (excluded.find(c) == std::string::npos) {
                filler_pool += c;
            }
        }
        if (filler_pool.empty()) {
            filler_pool = config.filler_alphabet.substr(0, 1);
        }
        for (char& c : text) {
            c = filler_pool[rng.index(filler_pool.size())];
        }

        if (with_recall) {
            // Needles first, then one recall episode per pair, all
            // non-overlapping and in order, with randomized gaps.
            const int slots = config.n_pairs * 2;
            const int reserved = config.n_pairs * (needle_len + recall_len);
            const std::int64_t slack = config.doc_len - reserved;
            // Sorted uniform cuts give exchangeable gaps, so episode sites
            // spread over the whole document.
            std::vector<std::int64_t> cuts(static_cast<std::size_t>(slots));
            for (std::int64_t& c : cuts) {
                c = rng.uniform_int(0, slack);
            }
            std::sort(cuts.begin(), cuts.end());
            std::vector<std::int64_t> gaps(static_cast<std::size_t>(slots));
            std::int64_t prev = 0;
            for (int i = 0; i < slots; ++i) {
                gaps[static_cast<std::size_t>(i)] = cuts[static_cast<std::size_t>(i)] - prev;
                prev = cuts[static_cast<std::size_t>(i)];
            }
            std::size_t cursor = 0;
            int slot = 0;
            for (const Pair& pair : pairs) {
                cursor += static_cast<std::size_t>(gaps[static_cast<std::size_t>(slot++)]);
                const std::string planted = pair.key + pair.value;
                text.replace(cursor, planted.size(), planted);
                cursor += planted.size();
            }
            for (const Pair& pair : pairs) {
                cursor += static_cast<std::size_t>(gaps[static_cast<std::size_t>(slot++)]);
                const char sep = config.separators[rng.index(config.separators.size())];
                const std::string episode = std::string(1, sep) + pair.key + pair.value;
                text.replace(cursor, episode.size(), episode);
                cursor += episode.size();
            }
        }
        corpus += text;
    }
    return corpus;
}

}  // namespace eplab
