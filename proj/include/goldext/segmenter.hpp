#pragma once

// Constituent segmentation of bracketed constituency parses: clause-like
// subtrees (highest S/SBAR/VP above an NP+VP node, relative clauses) are
// cut out, conjunctions split off, and leftovers kept as their own spans.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "goldext/error.hpp"
#include "goldext/textcore.hpp"

namespace goldext {

namespace tree_detail {
class BracketParser;
}

inline constexpr size_t kDefaultMinConstituentWords = 5;

struct TreeNode {
  std::string label;  // empty for leaves
  std::string word;   // leaves only
  int parent = -1;
  std::vector<int> children;
  int leaf_index = -1;  // position of a leaf within the sentence

  bool is_leaf() const { return leaf_index >= 0; }
};

/// Function tags and indices stripped: "NP-SBJ-1" -> "NP". Labels that
/// start with '-' ("-NONE-", "-LRB-") are kept whole.
inline std::string base_label(std::string_view label) {
  if (label.empty() || label.front() == '-') return std::string(label);
  size_t cut = label.find_first_of("-=", 1);
  return std::string(label.substr(0, cut));
}

class ParseTree {
 public:
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int i) const { return nodes_.at(static_cast<size_t>(i)); }
  int top() const { return 0; }
  size_t leaf_count() const { return leaves_.size(); }
  const std::vector<int>& leaves() const { return leaves_; }

  std::vector<std::string> words() const {
    std::vector<std::string> out;
    out.reserve(leaves_.size());
    for (int l : leaves_) out.push_back(nodes_[static_cast<size_t>(l)].word);
    return out;
  }

  /// The node constituent extraction treats as the sentence root: wrapper
  /// nodes labelled ROOT/TOP/empty with a single child are skipped.
  int clause_root() const {
    int r = 0;
    while (true) {
      const auto& n = nodes_[static_cast<size_t>(r)];
      if (n.is_leaf() || n.children.size() != 1) return r;
      std::string b = base_label(n.label);
      if (!(b.empty() || b == "ROOT" || b == "TOP")) return r;
      r = n.children.front();
    }
  }

  friend ParseTree parse_bracketed(std::string_view text);
  friend class tree_detail::BracketParser;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<int> leaves_;
};

namespace tree_detail {

class BracketParser {
 public:
  explicit BracketParser(std::string_view text) : text_(text) {}

  ParseTree parse() {
    ParseTree tree;
    skip_ws();
    if (pos_ >= text_.size()) fail("empty tree");
    if (text_[pos_] != '(') fail("expected '('");
    parse_node(tree, -1);
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after tree");
    return tree;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kParse, what + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string atom() {
    size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')') {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  int add_node(ParseTree& tree, TreeNode n) {
    tree.nodes_.push_back(std::move(n));
    int id = static_cast<int>(tree.nodes_.size()) - 1;
    int parent = tree.nodes_.back().parent;
    if (parent >= 0) tree.nodes_[static_cast<size_t>(parent)].children.push_back(id);
    return id;
  }

  int add_leaf(ParseTree& tree, int parent, std::string word) {
    TreeNode leaf;
    leaf.word = std::move(word);
    leaf.parent = parent;
    leaf.leaf_index = static_cast<int>(tree.leaves_.size());
    int id = add_node(tree, std::move(leaf));
    tree.leaves_.push_back(id);
    return id;
  }

  void parse_node(ParseTree& tree, int parent) {
    ++pos_;  // '('
    skip_ws();
    TreeNode n;
    n.parent = parent;
    if (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')') n.label = atom();
    int id = add_node(tree, std::move(n));
    bool any_child = false;
    while (true) {
      skip_ws();
      if (pos_ >= text_.size()) fail("unbalanced parentheses: missing ')'");
      char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        parse_node(tree, id);
      } else {
        add_leaf(tree, id, atom());
      }
      any_child = true;
    }
    if (!any_child) fail("node without children");
  }

  std::string_view text_;
  size_t pos_ = 0;
};

inline void serialize_node(const ParseTree& t, int id, std::string& out) {
  const TreeNode& n = t.node(id);
  if (n.is_leaf()) {
    out += n.word;
    return;
  }
  out += '(';
  out += n.label;
  for (int c : n.children) {
    if (!out.empty() && out.back() != '(') out += ' ';
    serialize_node(t, c, out);
  }
  out += ')';
}

}  // namespace tree_detail

/// Reads one tree in standard bracketed treebank notation.
inline ParseTree parse_bracketed(std::string_view text) { return tree_detail::BracketParser(text).parse(); }

/// Normalised single-line bracketing (single spaces, no padding).
inline std::string serialize(const ParseTree& tree) {
  std::string out;
  tree_detail::serialize_node(tree, tree.top(), out);
  return out;
}

/// SBAR whose first child is a WH phrase.
inline bool is_relative_clause(const ParseTree& tree, int node_id) {
  const TreeNode& n = tree.node(node_id);
  if (n.is_leaf() || base_label(n.label) != "SBAR" || n.children.empty()) return false;
  std::string first = base_label(tree.node(n.children.front()).label);
  return first == "WHNP" || first == "WHADVP" || first == "WHPP";
}

struct ConstituentSpan {
  // Token indices within the sentence, sorted and contiguous.
  std::vector<size_t> indices;
  std::string text;
  std::string source_sentence_id;

  size_t start() const { return indices.front(); }
  size_t end() const { return indices.back() + 1; }
};

namespace tree_detail {

// Mutable view of a tree used while cutting subtrees out.
class WorkingTree {
 public:
  explicit WorkingTree(const ParseTree& t) : t_(t), alive_(t.nodes().size(), 1) {}

  bool alive(int id) const { return alive_[static_cast<size_t>(id)] != 0; }

  std::vector<int> live_children(int id) const {
    std::vector<int> out;
    for (int c : t_.node(id).children) {
      if (alive(c)) out.push_back(c);
    }
    return out;
  }

  std::string label(int id) const { return base_label(t_.node(id).label); }

  bool has_child_label(int id, std::string_view a) const {
    for (int c : live_children(id)) {
      if (label(c) == a) return true;
    }
    return false;
  }

  void kill(int id) {
    alive_[static_cast<size_t>(id)] = 0;
    for (int c : t_.node(id).children) kill(c);
  }

  // Drops internal nodes with no living children, bottom-up.
  bool prune(int id) {
    if (!alive(id)) return false;
    const TreeNode& n = t_.node(id);
    if (n.is_leaf()) return true;
    bool any = false;
    for (int c : n.children) any = prune(c) || any;
    if (!any) alive_[static_cast<size_t>(id)] = 0;
    return any;
  }

  void live_leaves(int id, std::vector<size_t>& out) const {
    if (!alive(id)) return;
    const TreeNode& n = t_.node(id);
    if (n.is_leaf()) {
      out.push_back(static_cast<size_t>(n.leaf_index));
      return;
    }
    for (int c : n.children) live_leaves(c, out);
  }

  void remove_subtree(int id) {
    kill(id);
    int p = t_.node(id).parent;
    while (p >= 0 && live_children(p).empty()) {
      alive_[static_cast<size_t>(p)] = 0;
      p = t_.node(p).parent;
    }
  }

  void preorder(int id, std::vector<int>& out) const {
    if (!alive(id) || t_.node(id).is_leaf()) return;
    out.push_back(id);
    for (int c : t_.node(id).children) preorder(c, out);
  }

 private:
  const ParseTree& t_;
  std::vector<char> alive_;
};

inline bool in_set(const std::string& l, std::initializer_list<std::string_view> set) {
  return std::any_of(set.begin(), set.end(), [&](std::string_view s) { return l == s; });
}

}  // namespace tree_detail

/// Splits one sentence's parse into constituent spans. Spans are disjoint,
/// contiguous, ordered and together cover every token of the sentence.
inline std::vector<ConstituentSpan> constituent_segments(const ParseTree& tree,
                                                         size_t min_len = kDefaultMinConstituentWords,
                                                         const std::string& sentence_id = {}) {
  using tree_detail::in_set;
  tree_detail::WorkingTree work(tree);
  const auto& nodes = tree.nodes();
  const size_t n_tokens = tree.leaf_count();

  // Punctuation comes out first; its positions are restored at the end.
  std::vector<char> is_punct(n_tokens, 0);
  for (int leaf : tree.leaves()) {
    const TreeNode& n = nodes[static_cast<size_t>(leaf)];
    if (is_punctuation(n.word)) {
      is_punct[static_cast<size_t>(n.leaf_index)] = 1;
      work.kill(leaf);
    }
  }
  work.prune(tree.top());
  const int root = tree.clause_root();

  std::vector<int> collected;
  if (work.alive(root)) {
    std::vector<int> order;
    work.preorder(root, order);
    for (int st : order) {
      if (st == root) continue;
      if (work.has_child_label(st, "NP") && work.has_child_label(st, "VP")) {
        int stag = st;
        // climb towards the root through S/SBAR/VP ancestors
        while (true) {
          int parent = nodes[static_cast<size_t>(stag)].parent;
          if (parent < 0 || parent == root || !in_set(work.label(parent), {"SBAR", "S", "VP"})) break;
          stag = parent;
          if (in_set(work.label(stag), {"S", "SBAR"}) && !work.has_child_label(stag, "VP") &&
              !work.has_child_label(stag, "NP")) {
            break;
          }
        }
        collected.push_back(stag);
      } else if (is_relative_clause(tree, st)) {
        collected.push_back(st);
      }
    }
  }

  std::vector<std::vector<size_t>> lists;
  auto take = [&](int id) {
    std::vector<size_t> words;
    work.live_leaves(id, words);
    if (!words.empty()) lists.push_back(std::move(words));
    work.remove_subtree(id);
  };
  for (int st : collected) {
    if (!work.alive(st)) continue;
    int parent = nodes[static_cast<size_t>(st)].parent;
    if (parent >= 0) {
      // conjunctions to the left of a clause become their own piece
      for (int sib : work.live_children(parent)) {
        if (sib == st) break;
        if (work.label(sib) == "CC") take(sib);
      }
    }
    take(st);
  }
  {
    std::vector<size_t> rest;
    work.live_leaves(tree.top(), rest);
    if (!rest.empty()) lists.push_back(std::move(rest));
  }

  // Contiguity is judged over the word sequence, ignoring punctuation.
  std::vector<size_t> rank(n_tokens, 0);
  std::vector<size_t> word_positions;
  for (size_t i = 0; i < n_tokens; ++i) {
    if (!is_punct[i]) {
      rank[i] = word_positions.size();
      word_positions.push_back(i);
    }
  }
  std::vector<std::vector<size_t>> pieces;
  for (auto& list : lists) {
    std::sort(list.begin(), list.end());
    std::vector<size_t> piece;
    for (size_t idx : list) {
      if (!piece.empty() && rank[idx] != rank[piece.back()] + 1) {
        pieces.push_back(std::move(piece));
        piece.clear();
      }
      piece.push_back(idx);
    }
    if (!piece.empty()) pieces.push_back(std::move(piece));
  }
  std::sort(pieces.begin(), pieces.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });

  // Each punctuation token joins the piece holding the nearest preceding
  // word; leading punctuation joins the first piece.
  if (pieces.empty()) {
    std::vector<size_t> all(n_tokens);
    for (size_t i = 0; i < n_tokens; ++i) all[i] = i;
    pieces.push_back(std::move(all));
  } else {
    std::vector<int> owner(n_tokens, -1);
    for (size_t p = 0; p < pieces.size(); ++p) {
      for (size_t idx : pieces[p]) owner[idx] = static_cast<int>(p);
    }
    int last = 0;
    for (size_t i = 0; i < n_tokens; ++i) {
      if (is_punct[i]) {
        pieces[static_cast<size_t>(last)].push_back(i);
      } else {
        last = owner[i];
      }
    }
    for (auto& p : pieces) std::sort(p.begin(), p.end());
  }

  auto words_in = [&](const std::vector<size_t>& p) {
    return static_cast<size_t>(std::count_if(p.begin(), p.end(), [&](size_t i) { return !is_punct[i]; }));
  };
  std::vector<std::vector<size_t>> merged;
  std::vector<size_t> pending;
  for (auto& p : pieces) {
    std::vector<size_t> cur = std::move(p);
    if (!pending.empty()) {
      pending.insert(pending.end(), cur.begin(), cur.end());
      cur = std::move(pending);
      pending.clear();
    }
    if (words_in(cur) < min_len) {
      if (!merged.empty()) {
        merged.back().insert(merged.back().end(), cur.begin(), cur.end());
      } else {
        pending = std::move(cur);
      }
    } else {
      merged.push_back(std::move(cur));
    }
  }
  if (!pending.empty()) {
    if (merged.empty()) {
      merged.push_back(std::move(pending));
    } else {
      merged.back().insert(merged.back().end(), pending.begin(), pending.end());
    }
  }

  const auto words = tree.words();
  std::vector<ConstituentSpan> out;
  out.reserve(merged.size());
  for (auto& idx : merged) {
    ConstituentSpan span;
    span.indices = std::move(idx);
    for (size_t i : span.indices) {
      if (!span.text.empty()) span.text += ' ';
      span.text += words[i];
    }
    span.source_sentence_id = sentence_id;
    out.push_back(std::move(span));
  }
  return out;
}

using TreeMap = std::map<std::string, ParseTree>;

/// Replaces each sentence by its constituent spans; ids are "<sentence id>.<k>".
inline Document segment_document(const Document& chapter, const TreeMap& trees,
                                 size_t min_len = kDefaultMinConstituentWords) {
  Document out;
  out.doc_id = chapter.doc_id;
  out.role = chapter.role;
  out.source_label = chapter.source_label;
  out.chapter_id = chapter.chapter_id;
  for (const auto& sentence : chapter.segments) {
    auto it = trees.find(sentence.id);
    if (it == trees.end()) throw Error(ErrorCode::kMissingParse, "no parse tree for sentence '" + sentence.id + "'");
    const ParseTree& tree = it->second;
    auto leaves = tree.words();
    bool same = leaves.size() == sentence.tokens.size();
    for (size_t i = 0; same && i < leaves.size(); ++i) same = leaves[i] == sentence.tokens[i].surface;
    if (!same) {
      throw Error(ErrorCode::kParseMismatch,
                  "parse tree leaves do not match the tokens of sentence '" + sentence.id + "'");
    }
    auto spans = constituent_segments(tree, min_len, sentence.id);
    for (size_t k = 0; k < spans.size(); ++k) {
      Segment seg;
      seg.id = sentence.id + "." + std::to_string(k);
      seg.kind = SegmentKind::kConstituent;
      seg.source_sentence_id = sentence.id;
      seg.sentence_offset = spans[k].start();
      for (size_t idx : spans[k].indices) {
        Token t = sentence.tokens[idx];
        t.index = seg.tokens.size();
        seg.tokens.push_back(std::move(t));
      }
      out.segments.push_back(std::move(seg));
    }
  }
  return out;
}

/// One bracketed tree per non-comment line.
inline std::vector<ParseTree> read_trees(std::istream& in, const std::string& name = "<trees>") {
  std::vector<ParseTree> trees;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      trees.push_back(parse_bracketed(t));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return trees;
}

inline std::vector<ParseTree> read_trees_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read trees file '" + path + "'");
  return read_trees(in, path);
}

/// Pairs trees with a document's sentences by position.
inline TreeMap trees_for(const Document& doc, std::span<const ParseTree> trees) {
  TreeMap map;
  for (size_t i = 0; i < doc.segments.size() && i < trees.size(); ++i) map.emplace(doc.segments[i].id, trees[i]);
  return map;
}

/// {"sentence_id", "spans": [{"start", "end", "text"}]} per sentence.
inline nlohmann::ordered_json spans_to_json(const std::string& sentence_id, std::span<const ConstituentSpan> spans) {
  nlohmann::ordered_json j;
  j["sentence_id"] = sentence_id;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : spans) {
    nlohmann::ordered_json sj;
    sj["start"] = s.start();
    sj["end"] = s.end();
    sj["text"] = s.text;
    arr.push_back(std::move(sj));
  }
  j["spans"] = std::move(arr);
  return j;
}

}  // namespace goldext
