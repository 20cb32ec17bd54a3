#include "xact/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace xact {

Corpus make_corpus(std::string_view text)
{
    std::array<bool, 256> seen{};
    for (unsigned char ch : text) {
        seen[ch] = true;
    }
    Corpus c;
    std::array<int, 256> index{};
    for (int b = 0; b < 256; ++b) {
        if (seen[std::size_t(b)]) {
            index[std::size_t(b)] = int(c.alphabet.size());
            c.alphabet.push_back(static_cast<unsigned char>(b));
        }
    }
    c.tokens.reserve(text.size());
    for (unsigned char ch : text) {
        c.tokens.push_back(index[ch]);
    }
    return c;
}

Corpus load_corpus(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::invalid_argument("corpus: cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return make_corpus(buf.str());
}

std::filesystem::path bundled_corpus_path()
{
    return std::filesystem::path(XACT_DATA_DIR) / "corpus.txt";
}

Batch sample_batch(const Corpus& corpus, std::size_t rows, std::size_t context, std::mt19937_64& rng)
{
    if (corpus.tokens.size() < rows + context) {
        throw std::invalid_argument("corpus of " + std::to_string(corpus.tokens.size()) +
                                    " tokens is smaller than one batch of " + std::to_string(rows) +
                                    " windows with context " + std::to_string(context));
    }
    const std::uint64_t starts = corpus.tokens.size() - context;
    Batch b;
    b.rows = rows;
    b.contexts.reserve(rows * context);
    b.targets.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        // modulo keeps the draw sequence identical across standard libraries
        const std::size_t start = std::size_t(rng() % starts);
        const auto first = corpus.tokens.begin() + std::ptrdiff_t(start);
        b.contexts.insert(b.contexts.end(), first, first + std::ptrdiff_t(context));
        b.targets.push_back(corpus.tokens[start + context]);
    }
    return b;
}

} // namespace xact
