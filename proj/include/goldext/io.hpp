#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "goldext/error.hpp"
#include "goldext/textcore.hpp"

namespace goldext {

/// Parses one document record:
/// {"doc_id", "role", "source", "sentences": [...], optional "chapter_id"}.
inline Document document_from_json(const nlohmann::json& j, bool pretokenized = true,
                                   const StopwordSet& stopwords = default_stopwords()) {
  try {
    std::vector<std::string> sentences = j.at("sentences").get<std::vector<std::string>>();
    Document d = make_document(j.at("doc_id").get<std::string>(), parse_role(j.at("role").get<std::string>()),
                               sentences, pretokenized, stopwords);
    if (j.contains("source") && !j.at("source").is_null()) d.source_label = j.at("source").get<std::string>();
    if (j.contains("chapter_id") && !j.at("chapter_id").is_null()) {
      d.chapter_id = j.at("chapter_id").get<std::string>();
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad document record: ") + e.what());
  }
}

inline nlohmann::ordered_json document_to_json(const Document& d) {
  nlohmann::ordered_json j;
  j["doc_id"] = d.doc_id;
  j["role"] = role_name(d.role);
  j["source"] = d.source_label ? nlohmann::ordered_json(*d.source_label) : nlohmann::ordered_json(nullptr);
  if (d.chapter_id) j["chapter_id"] = *d.chapter_id;
  auto sentences = nlohmann::ordered_json::array();
  for (const auto& s : d.segments) sentences.push_back(segment_text(s));
  j["sentences"] = std::move(sentences);
  return j;
}

inline std::vector<Document> read_documents(std::istream& in, const std::string& name = "<documents>",
                                            bool pretokenized = true,
                                            const StopwordSet& stopwords = default_stopwords()) {
  std::vector<Document> docs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      docs.push_back(document_from_json(nlohmann::json::parse(line), pretokenized, stopwords));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, name + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

inline std::vector<Document> read_documents_file(const std::string& path, bool pretokenized = true,
                                                 const StopwordSet& stopwords = default_stopwords()) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read documents file '" + path + "'");
  return read_documents(in, path, pretokenized, stopwords);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a sibling temporary file and renames it into place, so a
/// reader never observes a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "short write to '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace goldext
