#include "propdetect/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "propdetect/util.hpp"

namespace propdetect {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kAbbreviations[] = {
    "mr",  "mrs", "ms",  "dr",  "prof", "sr",   "jr",  "st",  "vs",  "etc", "inc",  "ltd",
    "co",  "corp", "gen", "sen", "rep", "gov",  "lt",  "col", "capt", "sgt", "mt",  "ft",
    "dept", "est", "approx", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
    "oct", "nov", "dec"};

bool is_abbreviation(std::string_view word) {
  // Strip leading openers such as quotes or parentheses.
  while (!word.empty() && (word.front() == '"' || word.front() == '(' || word.front() == '\'' ||
                           word.front() == '[')) {
    word.remove_prefix(1);
  }
  if (word.empty()) return false;
  if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0]))) return true;
  if (word.find('.') != std::string_view::npos) return true;
  const std::string lower = to_lower(word);
  return std::find(std::begin(kAbbreviations), std::end(kAbbreviations), lower) !=
         std::end(kAbbreviations);
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Length of a closing quote/bracket at `pos`, 0 if none.
std::size_t closer_length(std::string_view line, std::size_t pos) {
  static constexpr std::array<std::string_view, 7> kClosers{
      "\"", "'", ")", "]", "\xE2\x80\x9D", "\xE2\x80\x99", "\xC2\xBB"};
  for (auto closer : kClosers) {
    if (line.substr(pos, closer.size()) == closer) return closer.size();
  }
  return 0;
}

void emit(std::string_view raw, std::size_t begin, std::size_t end, std::vector<Sentence>& out) {
  while (begin < end && is_space(raw[begin])) ++begin;
  while (end > begin && is_space(raw[end - 1])) --end;
  if (begin == end) return;
  out.push_back({static_cast<int>(out.size()) + 1, std::string(raw.substr(begin, end - begin)),
                 begin, end});
}

void segment_line(std::string_view raw, std::size_t line_begin, std::size_t line_end,
                  std::vector<Sentence>& out) {
  const std::string_view line = raw.substr(line_begin, line_end - line_begin);
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < line.size()) {
    if (!is_terminal(line[i])) {
      ++i;
      continue;
    }
    const std::size_t run_begin = i;
    while (i < line.size() && is_terminal(line[i])) ++i;
    const bool single_period = (i - run_begin == 1) && line[run_begin] == '.';
    while (i < line.size()) {
      const auto n = closer_length(line, i);
      if (n == 0) break;
      i += n;
    }
    if (i < line.size() && !is_space(line[i])) continue;

    std::size_t next = i;
    while (next < line.size() && is_space(line[next])) ++next;
    if (single_period) {
      std::size_t word_begin = run_begin;
      while (word_begin > start && !is_space(line[word_begin - 1])) --word_begin;
      if (is_abbreviation(line.substr(word_begin, run_begin - word_begin))) continue;
      if (next < line.size() && std::islower(static_cast<unsigned char>(line[next]))) continue;
    }
    emit(raw, line_begin + start, line_begin + i, out);
    start = i;
  }
  emit(raw, line_begin + start, line_end, out);
}

std::size_t parse_offset(std::string_view field, std::string_view source, std::size_t line_no) {
  std::size_t value = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty()) {
    throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": bad offset '" +
                     std::string(field) + "'");
  }
  return value;
}

std::string escape_tsv(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::uint64_t tie_seed(std::uint64_t seed, std::string_view article_id, int index) {
  return seed ^ fnv1a64(article_id) ^
         (static_cast<std::uint64_t>(index) * 0x9E3779B97F4A7C15ULL);
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error while reading file: " + path.string());
  return buffer.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("error while writing file: " + path.string());
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "dev") return Split::Dev;
  if (text == "test") return Split::Test;
  throw ValidationError("unknown split '" + std::string(text) + "'");
}

std::vector<Sentence> segment_sentences(std::string_view raw) {
  std::vector<Sentence> out;
  const std::size_t title_end = std::min(raw.find('\n'), raw.size());
  {
    std::size_t begin = 0;
    std::size_t end = title_end;
    while (begin < end && is_space(raw[begin])) ++begin;
    while (end > begin && is_space(raw[end - 1])) --end;
    out.push_back({1, std::string(raw.substr(begin, end - begin)), begin, end});
  }
  std::size_t pos = title_end;
  while (pos < raw.size()) {
    const std::size_t line_begin = pos + 1;
    if (line_begin > raw.size()) break;
    std::size_t line_end = raw.find('\n', line_begin);
    if (line_end == std::string_view::npos) line_end = raw.size();
    segment_line(raw, line_begin, line_end, out);
    pos = line_end;
  }
  return out;
}

std::vector<Sentence> segment_sentences(const Article& article) {
  return segment_sentences(article.raw);
}

Article make_article(std::string id, std::string raw) {
  Article article;
  article.id = std::move(id);
  article.raw = std::move(raw);
  article.sentences = segment_sentences(article.raw);
  article.title = article.sentences.front().text;
  return article;
}

std::vector<Article> load_articles(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() <= 11 || !name.starts_with("article") || !name.ends_with(".txt")) continue;
    files.emplace_back(name.substr(7, name.size() - 11), entry.path());
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
    if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
    return a.first < b.first;
  });
  std::vector<Article> articles;
  articles.reserve(files.size());
  for (auto& [id, path] : files) {
    std::string raw = read_file(path);
    if (trim(raw).empty()) throw ValidationError("empty article file: " + path.string());
    articles.push_back(make_article(id, std::move(raw)));
  }
  return articles;
}

std::vector<SpanAnnotation> parse_spans(std::string_view text, std::string_view source) {
  std::vector<SpanAnnotation> spans;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (fields.size() != 4) {
      throw ParseError(where + ": expected 4 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    SpanAnnotation span;
    span.article_id = std::string(trim(fields[0]));
    if (span.article_id.empty()) throw ParseError(where + ": empty article id");
    try {
      span.technique = parse_label(trim(fields[1]));
    } catch (const ValidationError& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (span.technique == TechniqueLabel::NonPropaganda) {
      throw ParseError(where + ": span label must be a propaganda technique");
    }
    span.begin = parse_offset(trim(fields[2]), source, line_no);
    span.end = parse_offset(trim(fields[3]), source, line_no);
    if (span.begin >= span.end) {
      throw ValidationError(where + ": span begin " + std::to_string(span.begin) +
                            " is not before end " + std::to_string(span.end));
    }
    spans.push_back(std::move(span));
  }
  return spans;
}

std::vector<SpanAnnotation> load_spans(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_directory(path, ec)) return parse_spans(read_file(path), path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.ends_with(".tsv") || name.find(".labels") != std::string::npos) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<SpanAnnotation> spans;
  for (const auto& file : files) {
    auto part = parse_spans(read_file(file), file.string());
    spans.insert(spans.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
  }
  return spans;
}

std::vector<SentenceRecord> project_labels(const Article& article,
                                           const std::vector<SpanAnnotation>& spans,
                                           std::uint64_t seed) {
  for (const auto& span : spans) {
    if (span.article_id != article.id) {
      throw ValidationError("span for article " + span.article_id +
                            " passed with article " + article.id);
    }
    if (span.begin >= span.end || span.end > article.raw.size()) {
      throw ValidationError("span [" + std::to_string(span.begin) + ", " +
                            std::to_string(span.end) + ") outside article " + article.id +
                            " of " + std::to_string(article.raw.size()) + " bytes");
    }
  }

  const int n = static_cast<int>(article.sentences.size());
  std::vector<SentenceRecord> records;
  records.reserve(article.sentences.size());
  for (const auto& sentence : article.sentences) {
    SentenceRecord record;
    record.article_id = article.id;
    record.sentence_index = sentence.index;
    record.n_sentences = n;
    record.text = sentence.text;

    std::size_t first_begin = std::string::npos;
    std::set<TechniqueLabel> tied;
    for (const auto& span : spans) {
      const bool overlaps = span.begin < sentence.end && sentence.begin < span.end;
      if (!overlaps) continue;
      if (span.begin < first_begin) {
        first_begin = span.begin;
        tied.clear();
      }
      if (span.begin == first_begin) tied.insert(span.technique);
    }
    if (tied.size() == 1) {
      record.label = *tied.begin();
    } else if (tied.size() > 1) {
      std::mt19937_64 gen(tie_seed(seed, article.id, sentence.index));
      auto it = tied.begin();
      std::advance(it, static_cast<long>(gen() % tied.size()));
      record.label = *it;
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<SentenceRecord> project_corpus(const std::vector<Article>& articles,
                                           const std::vector<SpanAnnotation>& spans,
                                           std::uint64_t seed) {
  std::map<std::string, std::vector<SpanAnnotation>> by_article;
  for (const auto& span : spans) by_article[span.article_id].push_back(span);
  std::set<std::string> known;
  for (const auto& article : articles) known.insert(article.id);
  for (const auto& [id, list] : by_article) {
    if (!known.contains(id)) throw ValidationError("spans reference unknown article " + id);
  }
  static const std::vector<SpanAnnotation> kNone;
  std::vector<SentenceRecord> records;
  for (const auto& article : articles) {
    auto it = by_article.find(article.id);
    auto part = project_labels(article, it == by_article.end() ? kNone : it->second, seed);
    records.insert(records.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  return records;
}

SplitSpec parse_split_spec(std::string_view text, std::string_view source) {
  SplitSpec spec;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (fields.size() != 2) throw ParseError(where + ": expected article_id<TAB>split");
    try {
      spec[std::string(trim(fields[0]))] = parse_split(trim(fields[1]));
    } catch (const ValidationError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return spec;
}

SplitSpec load_split_spec(const fs::path& path) {
  return parse_split_spec(read_file(path), path.string());
}

std::vector<SentenceRecord>& DataSplit::part(Split split) {
  switch (split) {
    case Split::Train: return train;
    case Split::Dev: return dev;
    case Split::Test: return test;
  }
  return train;
}

const std::vector<SentenceRecord>& DataSplit::part(Split split) const {
  return const_cast<DataSplit*>(this)->part(split);
}

DataSplit split_dataset(const std::vector<SentenceRecord>& records, const SplitSpec& split_spec) {
  DataSplit out;
  for (const auto& record : records) {
    auto it = split_spec.find(record.article_id);
    if (it == split_spec.end()) {
      throw ValidationError("article " + record.article_id + " has no split assignment");
    }
    SentenceRecord tagged = record;
    tagged.split = it->second;
    out.part(it->second).push_back(std::move(tagged));
  }
  return out;
}

BehaviorStats compute_behavior_stats(const std::vector<SentenceRecord>& records) {
  struct Flags {
    bool first5 = false;
    bool first3 = false;
    bool title = false;
  };
  std::map<std::string, Flags> articles;
  for (const auto& r : records) {
    auto& flags = articles[r.article_id];
    if (!is_propaganda(r.label)) continue;
    if (r.sentence_index <= 5) flags.first5 = true;
    if (r.sentence_index <= 3) flags.first3 = true;
    if (r.sentence_index == 1) flags.title = true;
  }
  BehaviorStats stats;
  if (articles.empty()) return stats;
  for (const auto& [id, flags] : articles) {
    stats.first5 += flags.first5;
    stats.first3 += flags.first3;
    stats.title += flags.title;
  }
  const double n = static_cast<double>(articles.size());
  stats.first5 /= n;
  stats.first3 /= n;
  stats.title /= n;
  return stats;
}

CorpusStats corpus_stats(const std::vector<SentenceRecord>& records) {
  CorpusStats stats;
  std::set<std::string> ids;
  for (const auto& r : records) {
    ++stats.total;
    ++stats.per_label[static_cast<std::size_t>(label_index(r.label))];
    if (is_propaganda(r.label)) ++stats.propaganda;
    ids.insert(r.article_id);
  }
  stats.articles = ids.size();
  stats.behavior = compute_behavior_stats(records);
  return stats;
}

std::string records_to_jsonl(const std::vector<SentenceRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json row;
    row["article_id"] = r.article_id;
    row["index"] = r.sentence_index;
    row["n"] = r.n_sentences;
    row["text"] = r.text;
    row["label"] = std::string(to_string(r.label));
    row["split"] = r.split ? json(std::string(to_string(*r.split))) : json(nullptr);
    out += row.dump();
    out += '\n';
  }
  return out;
}

std::vector<SentenceRecord> records_from_jsonl(std::string_view text) {
  std::vector<SentenceRecord> records;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json row = json::parse(line);
      SentenceRecord r;
      r.article_id = row.at("article_id").get<std::string>();
      r.sentence_index = row.at("index").get<int>();
      r.n_sentences = row.at("n").get<int>();
      r.text = row.at("text").get<std::string>();
      r.label = parse_label(row.at("label").get<std::string>());
      if (row.contains("split") && !row["split"].is_null()) {
        r.split = parse_split(row["split"].get<std::string>());
      }
      if (r.sentence_index < 1 || r.sentence_index > r.n_sentences) {
        throw ValidationError("sentence index out of range");
      }
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError("records line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ParseError("records line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::string records_to_tsv(const std::vector<SentenceRecord>& records) {
  std::string out = "article_id\tindex\tn\ttext\tlabel\tsplit\n";
  for (const auto& r : records) {
    out += r.article_id + '\t' + std::to_string(r.sentence_index) + '\t' +
           std::to_string(r.n_sentences) + '\t' + escape_tsv(r.text) + '\t' +
           std::string(to_string(r.label)) + '\t' +
           (r.split ? std::string(to_string(*r.split)) : std::string()) + '\n';
  }
  return out;
}

}  // namespace propdetect
