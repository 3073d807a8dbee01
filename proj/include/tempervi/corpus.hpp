#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace tempervi {

/// Sparse bag of words: distinct word ids (sorted) with their counts.
struct Document {
  std::vector<std::uint32_t> words;
  std::vector<std::uint32_t> counts;

  std::size_t num_types() const noexcept { return words.size(); }
  std::size_t num_tokens() const noexcept;
  bool empty() const noexcept { return words.empty(); }

  /// Builds a document from (word, count) pairs, summing duplicates.
  static Document from_pairs(std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs);

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  std::size_t vocab_size = 0;
  std::vector<Document> docs;
  std::vector<std::string> vocab;  // optional, empty or vocab_size entries

  std::size_t num_docs() const noexcept { return docs.size(); }
  std::size_t total_words() const noexcept;
  double mean_words_per_doc() const noexcept;

  /// Throws ValidationError when a word id is out of range or a count is 0.
  void validate() const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.vocab_size == b.vocab_size && a.docs == b.docs;
  }
};

/// UCI bag-of-words: three header lines D, V, NNZ then `docID wordID count`
/// triples with 1-based ids. Duplicate (doc, word) rows are summed; documents
/// without rows are kept as empty documents.
Corpus read_corpus(std::istream& in);
Corpus load_corpus(const std::string& path);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::string& path, const Corpus& corpus);

/// One token per line.
std::vector<std::string> load_vocab(const std::string& path);

/// Token-level split of a document: a uniformly random ceil(N/2) tokens are
/// observed, the rest held out. Deterministic given the seed.
std::pair<Document, Document> heldout_split(const Document& doc, std::uint64_t seed);

}  // namespace tempervi
