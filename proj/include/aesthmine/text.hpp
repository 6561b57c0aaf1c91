#pragma once

// Comment documents to bag-of-words vectors: tokenization, unigram/bigram
// vocabularies, tf-idf weighting and the sparse matrix text format.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "aesthmine/corpus.hpp"
#include "aesthmine/detail/parallel.hpp"
#include "aesthmine/detail/strings.hpp"
#include "aesthmine/error.hpp"

namespace aesthmine {

// Negations and intensifiers ("not", "too", "very", "well") are kept on
// purpose: they carry the polarity of bigrams such as "too dark".
inline const std::unordered_set<std::string>& stop_words() {
    static const std::unordered_set<std::string> words{
        "a",        "about",     "above",   "across",     "after",    "afterwards", "again",   "against",
        "all",      "almost",    "along",   "already",    "also",     "although",   "always",  "am",
        "among",    "an",        "and",     "another",    "any",      "anyone",     "anything", "are",
        "around",   "as",        "at",      "be",         "became",   "because",    "become",  "becomes",
        "been",     "before",    "being",   "below",      "beside",   "besides",    "between", "both",
        "but",      "by",        "can",     "could",      "did",      "do",         "doing",   "down",
        "during",   "each",      "eg",      "either",     "else",     "etc",        "even",    "ever",
        "every",    "everyone",  "everything", "for",     "from",     "further",    "get",     "gets",
        "got",      "had",       "has",     "have",       "having",   "he",         "hence",   "her",
        "here",     "hers",      "herself", "him",        "himself",  "his",        "how",     "however",
        "i",        "id",        "ie",      "if",         "im",       "in",         "into",    "is",
        "it",       "its",       "itself",  "ive",        "just",     "let",        "ll",      "may",
        "me",       "meanwhile", "might",   "mine",       "must",     "my",         "myself",  "of",
        "off",      "often",     "on",      "once",       "one",      "onto",       "or",      "other",
        "others",   "otherwise", "our",     "ours",       "ourselves", "out",       "over",    "own",
        "per",      "perhaps",   "rather",  "re",         "same",     "she",        "should",  "since",
        "so",       "some",      "someone", "something",  "such",     "than",       "that",    "the",
        "their",    "theirs",    "them",    "themselves", "then",     "there",      "therefore", "these",
        "they",     "this",      "those",   "though",     "through",  "thus",       "to",      "together",
        "toward",   "towards",   "under",   "until",      "up",       "upon",       "us",      "ve",
        "via",      "was",       "we",      "were",       "what",     "whatever",   "when",    "where",
        "whether",  "which",     "while",   "who",        "whom",     "whose",      "why",     "will",
        "with",     "within",    "would",   "yet",        "you",      "your",       "yours",   "yourself",
        "yourselves"};
    return words;
}

struct TokenizerOptions {
    /// Spell-correction hook applied to each lowercased token before
    /// filtering; identity by default.
    std::function<std::string(std::string)> correct;
    std::size_t min_length = 2;
};

/// Lowercases, splits on non-letters (bytes >= 0x80 count as letters so
/// UTF-8 words stay whole), then drops stop-words, numbers and short tokens.
inline std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opts = {}) {
    std::vector<std::string> out;
    const auto& stops = stop_words();
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        std::string tok = opts.correct ? opts.correct(std::move(cur)) : std::move(cur);
        cur.clear();
        if (tok.size() < opts.min_length) return;
        if (stops.count(tok)) return;
        if (std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; })) return;
        out.push_back(std::move(tok));
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if ((c >= 'a' && c <= 'z') || c >= 0x80) {
            cur.push_back(ch);
        } else if (c >= 'A' && c <= 'Z') {
            cur.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

/// Comment texts in stored order joined by single spaces.
inline std::string merge_comments(const ImageRecord& record) {
    std::string doc;
    for (const auto& c : record.comments) {
        if (!doc.empty()) doc.push_back(' ');
        doc += c.text;
    }
    return doc;
}

enum class TermKind { Unigram, Bigram };
enum class VocabularyKind { Unigram, Bigram, Both };

inline std::optional<VocabularyKind> parse_vocabulary_kind(std::string_view s) {
    if (s == "uni" || s == "unigram") return VocabularyKind::Unigram;
    if (s == "bi" || s == "bigram") return VocabularyKind::Bigram;
    if (s == "both") return VocabularyKind::Both;
    return std::nullopt;
}

struct Term {
    TermKind kind = TermKind::Unigram;
    std::string first;
    std::string second;  // empty for unigrams

    static Term unigram(std::string w) { return {TermKind::Unigram, std::move(w), {}}; }
    static Term bigram(std::string a, std::string b) { return {TermKind::Bigram, std::move(a), std::move(b)}; }

    /// "great" or "great shot".
    std::string text() const { return kind == TermKind::Unigram ? first : first + ' ' + second; }

    static Term from_text(std::string_view s) {
        auto parts = detail::split_ws(s);
        if (parts.size() == 1) return unigram(parts[0]);
        if (parts.size() == 2) return bigram(parts[0], parts[1]);
        throw ParseError("term must have one or two tokens: \"" + std::string(s) + "\"");
    }

    auto operator<=>(const Term&) const = default;
    bool operator==(const Term&) const = default;
};

/// Term occurrences in one image's comments. Bigrams are consecutive token
/// pairs inside a single comment, never across comment boundaries.
using TermCounts = std::unordered_map<std::string, std::uint32_t>;

inline TermCounts document_term_counts(const ImageRecord& record, VocabularyKind kind,
                                       const TokenizerOptions& opts = {}) {
    TermCounts counts;
    for (const auto& c : record.comments) {
        const auto toks = tokenize(c.text, opts);
        if (kind != VocabularyKind::Bigram)
            for (const auto& t : toks) ++counts[t];
        if (kind != VocabularyKind::Unigram)
            for (std::size_t i = 1; i < toks.size(); ++i) ++counts[toks[i - 1] + ' ' + toks[i]];
    }
    return counts;
}

class Vocabulary {
public:
    Vocabulary() = default;

    /// Terms are reordered: unigrams before bigrams, then lexicographic.
    Vocabulary(std::vector<Term> terms, std::vector<std::uint64_t> counts, std::vector<std::uint64_t> doc_freq,
               std::uint64_t min_count)
        : min_count_(min_count) {
        if (terms.size() != counts.size() || terms.size() != doc_freq.size())
            throw ArgumentError("vocabulary columns have different lengths");
        std::vector<std::size_t> order(terms.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return terms[a] < terms[b]; });
        for (auto i : order) {
            const auto key = terms[i].text();
            if (index_.count(key)) throw ValidationError("duplicate vocabulary term \"" + key + "\"");
            index_.emplace(key, terms_.size());
            terms_.push_back(std::move(terms[i]));
            counts_.push_back(counts[i]);
            doc_freq_.push_back(doc_freq[i]);
        }
    }

    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const Term& term(std::size_t i) const { return terms_[i]; }
    const std::vector<Term>& terms() const { return terms_; }
    std::uint64_t count(std::size_t i) const { return counts_[i]; }
    std::uint64_t doc_freq(std::size_t i) const { return doc_freq_[i]; }
    std::uint64_t min_count() const { return min_count_; }

    std::optional<std::size_t> index_of(const std::string& text) const {
        auto it = index_.find(text);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// Sub-vocabulary of one term kind, preserving statistics.
    Vocabulary restrict_to(TermKind kind) const {
        std::vector<Term> t;
        std::vector<std::uint64_t> c, d;
        for (std::size_t i = 0; i < size(); ++i) {
            if (terms_[i].kind != kind) continue;
            t.push_back(terms_[i]);
            c.push_back(counts_[i]);
            d.push_back(doc_freq_[i]);
        }
        return Vocabulary(std::move(t), std::move(c), std::move(d), min_count_);
    }

    bool operator==(const Vocabulary& o) const {
        return terms_ == o.terms_ && counts_ == o.counts_ && doc_freq_ == o.doc_freq_ && min_count_ == o.min_count_;
    }

private:
    std::vector<Term> terms_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> doc_freq_;
    std::uint64_t min_count_ = 1;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Keeps terms occurring at least `min_count` times corpus-wide.
inline Vocabulary build_vocabulary(const Corpus& corpus, VocabularyKind kind, std::uint64_t min_count,
                                   unsigned jobs = 1, const TokenizerOptions& opts = {}) {
    if (min_count < 1) throw ArgumentError("min_count must be at least 1");
    std::vector<TermCounts> per_doc(corpus.size());
    detail::parallel_for(corpus.size(), jobs,
                         [&](std::size_t i) { per_doc[i] = document_term_counts(corpus[i], kind, opts); });

    std::unordered_map<std::string, std::pair<std::uint64_t, std::uint64_t>> totals;  // count, df
    for (const auto& doc : per_doc)
        for (const auto& [key, n] : doc) {
            auto& t = totals[key];
            t.first += n;
            t.second += 1;
        }

    std::vector<Term> terms;
    std::vector<std::uint64_t> counts, dfs;
    for (const auto& [key, t] : totals) {
        if (t.first < min_count) continue;
        terms.push_back(Term::from_text(key));
        counts.push_back(t.first);
        dfs.push_back(t.second);
    }
    return Vocabulary(std::move(terms), std::move(counts), std::move(dfs), min_count);
}

// ---------------------------------------------------------------------------
// Sparse document matrix

struct SparseVector {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;

    std::size_t nnz() const { return indices.size(); }
    bool empty() const { return indices.empty(); }

    double norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }

    double dot(const std::vector<double>& dense) const {
        double s = 0.0;
        for (std::size_t k = 0; k < indices.size(); ++k) s += values[k] * dense[indices[k]];
        return s;
    }

    bool operator==(const SparseVector&) const = default;
};

struct DocumentMatrix {
    std::vector<SparseVector> rows;
    std::vector<std::string> image_ids;
    std::vector<double> targets;
    std::size_t dim = 0;

    std::size_t size() const { return rows.size(); }

    std::vector<std::size_t> empty_rows() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].empty()) out.push_back(i);
        return out;
    }

    /// Rows for the given ids, in the order given; unknown ids throw.
    DocumentMatrix select(const std::vector<std::string>& ids) const {
        std::unordered_map<std::string, std::size_t> pos;
        for (std::size_t i = 0; i < image_ids.size(); ++i) pos.emplace(image_ids[i], i);
        DocumentMatrix out;
        out.dim = dim;
        for (const auto& id : ids) {
            auto it = pos.find(id);
            if (it == pos.end()) throw ArgumentError("matrix has no row for image \"" + id + "\"");
            out.rows.push_back(rows[it->second]);
            out.image_ids.push_back(id);
            out.targets.push_back(targets[it->second]);
        }
        return out;
    }

    bool operator==(const DocumentMatrix&) const = default;
};

namespace detail {

inline SparseVector counts_to_sparse(const TermCounts& counts, const Vocabulary& vocab) {
    std::vector<std::pair<std::uint32_t, double>> entries;
    for (const auto& [key, n] : counts)
        if (auto idx = vocab.index_of(key)) entries.emplace_back(static_cast<std::uint32_t>(*idx), n);
    std::sort(entries.begin(), entries.end());
    SparseVector v;
    for (const auto& [i, x] : entries) {
        v.indices.push_back(i);
        v.values.push_back(x);
    }
    return v;
}

inline VocabularyKind kind_of(const Vocabulary& vocab) {
    bool uni = false, bi = false;
    for (const auto& t : vocab.terms()) (t.kind == TermKind::Unigram ? uni : bi) = true;
    if (uni && bi) return VocabularyKind::Both;
    return bi ? VocabularyKind::Bigram : VocabularyKind::Unigram;
}

}  // namespace detail

/// Raw term counts per image over the vocabulary (input for topic models).
inline DocumentMatrix count_matrix(const Corpus& corpus, const Vocabulary& vocab, unsigned jobs = 1,
                                   const TokenizerOptions& opts = {}) {
    DocumentMatrix m;
    m.dim = vocab.size();
    m.rows.resize(corpus.size());
    const auto kind = detail::kind_of(vocab);
    detail::parallel_for(corpus.size(), jobs, [&](std::size_t i) {
        m.rows[i] = detail::counts_to_sparse(document_term_counts(corpus[i], kind, opts), vocab);
    });
    for (const auto& r : corpus) {
        m.image_ids.push_back(r.image_id);
        m.targets.push_back(r.mean_score());
    }
    return m;
}

/// Smoothed inverse document frequencies, idf = ln((1+N)/(1+df)) + 1, with
/// N the number of documents holding at least one vocabulary term.
inline std::vector<double> inverse_document_frequency(const DocumentMatrix& counts) {
    std::vector<std::uint64_t> df(counts.dim, 0);
    std::uint64_t n_docs = 0;
    for (const auto& row : counts.rows) {
        if (row.empty()) continue;
        ++n_docs;
        for (auto j : row.indices) ++df[j];
    }
    std::vector<double> idf(counts.dim);
    for (std::size_t j = 0; j < counts.dim; ++j)
        idf[j] = std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df[j]))) + 1.0;
    return idf;
}

/// tf * idf with each non-empty row scaled to unit L2 norm.
inline DocumentMatrix apply_tfidf(DocumentMatrix counts, const std::vector<double>& idf) {
    if (idf.size() != counts.dim) throw ArgumentError("idf length does not match matrix dimension");
    for (auto& row : counts.rows) {
        for (std::size_t k = 0; k < row.nnz(); ++k) row.values[k] *= idf[row.indices[k]];
        const double norm = row.norm();
        if (norm > 0.0)
            for (auto& v : row.values) v /= norm;
    }
    return counts;
}

inline DocumentMatrix vectorize_tfidf(const Corpus& corpus, const Vocabulary& vocab, unsigned jobs = 1,
                                      const TokenizerOptions& opts = {}) {
    if (vocab.empty()) throw ArgumentError("cannot vectorize with an empty vocabulary");
    auto counts = count_matrix(corpus, vocab, jobs, opts);
    const auto idf = inverse_document_frequency(counts);
    return apply_tfidf(std::move(counts), idf);
}

// ---------------------------------------------------------------------------
// Persistence
//
// Matrix file: first line "D N", then one "row col value" line per non-zero
// (0-based). Sidecar "<path>.ids": one "image_id<TAB>target" line per row.
// Vocabulary file: one "term<TAB>count<TAB>doc_freq" line per term, preceded
// by a "# min_count N" header.

inline void write_matrix(const std::string& path, const DocumentMatrix& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write matrix: " + path);
    out << m.dim << ' ' << m.size() << '\n';
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t k = 0; k < m.rows[i].nnz(); ++k)
            out << i << ' ' << m.rows[i].indices[k] << ' ' << detail::format_double(m.rows[i].values[k]) << '\n';
    std::ofstream ids(path + ".ids");
    if (!ids) throw IoError("cannot write matrix sidecar: " + path + ".ids");
    for (std::size_t i = 0; i < m.size(); ++i)
        ids << m.image_ids[i] << '\t' << detail::format_double(m.targets[i]) << '\n';
}

inline DocumentMatrix read_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read matrix: " + path);
    DocumentMatrix m;
    std::size_t n_rows = 0;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header", 1);
    {
        std::istringstream hs(line);
        if (!(hs >> m.dim >> n_rows)) throw ParseError("header must be \"D N\"", 1);
    }
    m.rows.resize(n_rows);
    std::size_t line_no = 1;
    long last_row = -1, last_col = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::istringstream ls(line);
        std::size_t r = 0, c = 0;
        double v = 0.0;
        if (!(ls >> r >> c >> v)) throw ParseError("expected \"row col value\"", line_no);
        if (r >= n_rows || c >= m.dim) throw ParseError("entry out of range", line_no);
        if (static_cast<long>(r) < last_row ||
            (static_cast<long>(r) == last_row && static_cast<long>(c) <= last_col))
            throw ParseError("entries must be sorted by row then column", line_no);
        last_row = static_cast<long>(r);
        last_col = static_cast<long>(c);
        m.rows[r].indices.push_back(static_cast<std::uint32_t>(c));
        m.rows[r].values.push_back(v);
    }
    std::ifstream ids(path + ".ids");
    if (!ids) throw IoError("cannot read matrix sidecar: " + path + ".ids");
    line_no = 0;
    while (std::getline(ids, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto parts = detail::split(line, '\t');
        if (parts.size() != 2) throw ParseError("sidecar line must be \"id<TAB>target\"", line_no);
        m.image_ids.push_back(parts[0]);
        m.targets.push_back(std::stod(parts[1]));
    }
    if (m.image_ids.size() != n_rows) throw ValidationError("sidecar row count does not match matrix header");
    return m;
}

inline void write_vocabulary(const std::string& path, const Vocabulary& vocab) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write vocabulary: " + path);
    out << "# min_count " << vocab.min_count() << '\n';
    for (std::size_t i = 0; i < vocab.size(); ++i)
        out << vocab.term(i).text() << '\t' << vocab.count(i) << '\t' << vocab.doc_freq(i) << '\n';
}

inline Vocabulary read_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read vocabulary: " + path);
    std::vector<Term> terms;
    std::vector<std::uint64_t> counts, dfs;
    std::uint64_t min_count = 1;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto parts = detail::split_ws(line);
            if (parts.size() == 3 && parts[1] == "min_count") min_count = std::stoull(parts[2]);
            continue;
        }
        auto parts = detail::split(line, '\t');
        if (parts.size() != 3) throw ParseError("vocabulary line must be \"term<TAB>count<TAB>df\"", line_no);
        terms.push_back(Term::from_text(parts[0]));
        counts.push_back(std::stoull(parts[1]));
        dfs.push_back(std::stoull(parts[2]));
    }
    return Vocabulary(std::move(terms), std::move(counts), std::move(dfs), min_count);
}

}  // namespace aesthmine
