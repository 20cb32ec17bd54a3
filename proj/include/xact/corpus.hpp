#pragma once

#include "xact/model.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace xact {

/// Character-level corpus: the vocabulary is the sorted set of bytes that
/// occur in the text.
struct Corpus {
    std::vector<unsigned char> alphabet;
    std::vector<int> tokens;

    std::size_t vocab() const { return alphabet.size(); }
};

Corpus make_corpus(std::string_view text);
Corpus load_corpus(const std::filesystem::path& path);

/// Path of the text fixture shipped with the repository.
std::filesystem::path bundled_corpus_path();

/// Uniformly sampled windows: `context` tokens followed by their next token.
/// Throws std::invalid_argument when the corpus cannot supply `rows`
/// distinct windows.
Batch sample_batch(const Corpus& corpus, std::size_t rows, std::size_t context, std::mt19937_64& rng);

} // namespace xact
