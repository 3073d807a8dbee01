#include "tempervi/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tempervi/errors.hpp"

namespace tempervi {

std::size_t Document::num_tokens() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Document Document::from_pairs(std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  Document doc;
  for (const auto& [word, count] : pairs) {
    if (count == 0) continue;
    if (!doc.words.empty() && doc.words.back() == word) {
      doc.counts.back() += count;
    } else {
      doc.words.push_back(word);
      doc.counts.push_back(count);
    }
  }
  return doc;
}

std::size_t Corpus::total_words() const noexcept {
  std::size_t total = 0;
  for (const auto& d : docs) total += d.num_tokens();
  return total;
}

double Corpus::mean_words_per_doc() const noexcept {
  return docs.empty() ? 0.0 : static_cast<double>(total_words()) / static_cast<double>(docs.size());
}

void Corpus::validate() const {
  if (!vocab.empty() && vocab.size() != vocab_size) {
    throw ValidationError("vocabulary list has " + std::to_string(vocab.size()) +
                          " entries but the corpus declares V=" + std::to_string(vocab_size));
  }
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    if (doc.words.size() != doc.counts.size()) {
      throw ValidationError("document " + std::to_string(d) + ": words and counts differ in length");
    }
    for (std::size_t j = 0; j < doc.words.size(); ++j) {
      if (doc.words[j] >= vocab_size) {
        throw ValidationError("document " + std::to_string(d) + ": word id " +
                              std::to_string(doc.words[j]) + " >= V=" + std::to_string(vocab_size));
      }
      if (doc.counts[j] == 0) {
        throw ValidationError("document " + std::to_string(d) + ": zero count");
      }
      if (j > 0 && doc.words[j] <= doc.words[j - 1]) {
        throw ValidationError("document " + std::to_string(d) + ": word ids not strictly increasing");
      }
    }
  }
}

namespace {

bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

long long parse_header_value(std::istream& in, std::size_t& line_no, const char* name) {
  std::string line;
  if (!next_content_line(in, line, line_no)) {
    throw ParseError(line_no, std::string("missing header value ") + name);
  }
  std::istringstream ss(line);
  long long value = -1;
  std::string rest;
  if (!(ss >> value) || (ss >> rest) || value < 0) {
    throw ParseError(line_no, std::string("bad header value for ") + name + ": '" + line + "'");
  }
  return value;
}

}  // namespace

Corpus read_corpus(std::istream& in) {
  std::size_t line_no = 0;
  const auto n_docs = static_cast<std::size_t>(parse_header_value(in, line_no, "D"));
  const auto n_vocab = static_cast<std::size_t>(parse_header_value(in, line_no, "V"));
  parse_header_value(in, line_no, "NNZ");

  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> rows(n_docs);
  std::string line;
  while (next_content_line(in, line, line_no)) {
    std::istringstream ss(line);
    long long doc_id = 0, word_id = 0, count = 0;
    std::string rest;
    if (!(ss >> doc_id >> word_id >> count) || (ss >> rest)) {
      throw ParseError(line_no, "expected 'docID wordID count', got '" + line + "'");
    }
    if (doc_id < 1 || static_cast<std::size_t>(doc_id) > n_docs) {
      throw ParseError(line_no, "document id " + std::to_string(doc_id) + " outside 1.." +
                                    std::to_string(n_docs));
    }
    if (word_id < 1) {
      throw ParseError(line_no, "word id must be >= 1");
    }
    if (static_cast<std::size_t>(word_id) > n_vocab) {
      throw ValidationError("line " + std::to_string(line_no) + ": word id " +
                            std::to_string(word_id) + " exceeds V=" + std::to_string(n_vocab));
    }
    if (count < 1) {
      throw ParseError(line_no, "count must be >= 1");
    }
    rows[static_cast<std::size_t>(doc_id - 1)].emplace_back(static_cast<std::uint32_t>(word_id - 1),
                                                           static_cast<std::uint32_t>(count));
  }

  Corpus corpus;
  corpus.vocab_size = n_vocab;
  corpus.docs.reserve(n_docs);
  for (auto& r : rows) corpus.docs.push_back(Document::from_pairs(std::move(r)));
  corpus.validate();
  return corpus;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file '" + path + "'");
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  std::size_t nnz = 0;
  for (const auto& d : corpus.docs) nnz += d.words.size();
  out << corpus.num_docs() << '\n' << corpus.vocab_size << '\n' << nnz << '\n';
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto& doc = corpus.docs[d];
    for (std::size_t j = 0; j < doc.words.size(); ++j) {
      out << d + 1 << ' ' << doc.words[j] + 1 << ' ' << doc.counts[j] << '\n';
    }
  }
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file '" + path + "'");
  write_corpus(out, corpus);
}

std::vector<std::string> load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file '" + path + "'");
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }
  return vocab;
}

std::pair<Document, Document> heldout_split(const Document& doc, std::uint64_t seed) {
  std::vector<std::uint32_t> tokens;
  tokens.reserve(doc.num_tokens());
  for (std::size_t j = 0; j < doc.words.size(); ++j) {
    tokens.insert(tokens.end(), doc.counts[j], doc.words[j]);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(tokens.begin(), tokens.end(), rng);
  const std::size_t n_observed = (tokens.size() + 1) / 2;

  auto to_doc = [](auto first, auto last) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (auto it = first; it != last; ++it) pairs.emplace_back(*it, 1u);
    return Document::from_pairs(std::move(pairs));
  };
  return {to_doc(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(n_observed)),
          to_doc(tokens.begin() + static_cast<std::ptrdiff_t>(n_observed), tokens.end())};
}

}  // namespace tempervi
