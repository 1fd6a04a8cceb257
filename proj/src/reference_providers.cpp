#include "propdetect/reference_providers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "propdetect/util.hpp"

namespace propdetect {
namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

// Tokens for the chunker and the sentiment analyzer: words keep their case; every other
// non-space character is its own token.
std::vector<std::string> raw_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(static_cast<char>(c))) {
      ++i;
      continue;
    }
    if (!is_word_char(c)) {
      out.emplace_back(1, static_cast<char>(c));
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size()) {
      const auto d = static_cast<unsigned char>(text[j]);
      if (is_word_char(d)) {
        ++j;
      } else if ((d == '\'' || d == '-' || d == '.') && j + 1 < text.size() &&
                 is_word_char(static_cast<unsigned char>(text[j + 1])) && j > i) {
        j += 1;
      } else {
        break;
      }
    }
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_alpha_word(const std::string& token) {
  return !token.empty() && is_word_char(static_cast<unsigned char>(token[0]));
}

// ---------------------------------------------------------------------------------------------
// Stance

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words{
      "a",    "an",   "the",  "and",  "or",   "but",  "of",   "to",   "in",   "on",   "at",
      "by",   "for",  "with", "from", "as",   "is",   "are",  "was",  "were", "be",   "been",
      "it",   "its",  "this", "that", "these", "those", "he",  "she",  "they", "we",   "i",
      "you",  "his",  "her",  "their", "our", "has",  "have", "had",  "do",   "does", "did",
      "will", "would", "there", "than", "then", "so",   "if",   "about", "into", "which",
      "who",  "what", "when", "where", "how", "all",  "also", "just", "very", "more", "s"};
  return words;
}

const std::unordered_set<std::string>& negation_cues() {
  static const std::unordered_set<std::string> words{
      "not",    "no",     "never",   "nor",    "deny",    "denies",  "denied", "false",
      "fake",   "hoax",   "refute",  "refutes", "refuted", "reject", "rejects", "rejected",
      "debunk", "debunked", "untrue", "myth",  "lie",     "lies",    "wrong",  "isn't",
      "aren't", "wasn't", "weren't", "don't",  "doesn't", "didn't",  "can't",  "cannot",
      "won't",  "wouldn't", "hasn't", "haven't", "never"};
  return words;
}

const std::unordered_set<std::string>& hedge_cues() {
  static const std::unordered_set<std::string> words{
      "said",    "says",    "say",      "reported", "reportedly", "according", "claims",
      "claimed", "claim",   "allegedly", "alleged", "suggests",   "suggested", "may",
      "might",   "could",   "possibly", "perhaps",  "reports",    "told",      "stated",
      "argue",   "argues",  "argued"};
  return words;
}

std::set<std::string> content_words(const std::vector<std::string>& tokens) {
  std::set<std::string> out;
  for (const auto& t : tokens) {
    if (!stopwords().contains(t)) out.insert(t);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Sentiment lexicon (valences on a -4..4 scale).

const std::unordered_map<std::string, double>& sentiment_lexicon() {
  static const std::unordered_map<std::string, double> lexicon{
      // positive
      {"good", 1.9}, {"great", 3.1}, {"excellent", 3.2}, {"best", 3.2}, {"better", 1.9},
      {"love", 3.2}, {"loved", 2.9}, {"loves", 2.7}, {"happy", 2.7}, {"hope", 1.9},
      {"hopeful", 2.3}, {"proud", 2.1}, {"pride", 1.4}, {"hero", 2.6}, {"heroes", 2.4},
      {"heroic", 2.6}, {"brave", 2.4}, {"courage", 2.2}, {"freedom", 3.2}, {"free", 2.3},
      {"liberty", 2.4}, {"win", 2.8}, {"wins", 2.7}, {"won", 2.7}, {"winning", 2.4},
      {"victory", 2.9}, {"success", 2.7}, {"successful", 2.8}, {"strong", 2.3},
      {"strength", 2.2}, {"safe", 1.9}, {"safety", 1.8}, {"peace", 2.5}, {"peaceful", 2.2},
      {"patriotic", 1.9}, {"glorious", 3.0}, {"glory", 2.6}, {"wonderful", 2.7},
      {"amazing", 2.8}, {"beautiful", 2.9}, {"honest", 2.3}, {"honor", 2.2}, {"truth", 1.3},
      {"trust", 2.3}, {"support", 1.7}, {"supports", 1.5}, {"protect", 1.8},
      {"protected", 1.9}, {"help", 1.7}, {"helps", 1.6}, {"benefit", 1.6}, {"fair", 1.3},
      {"justice", 2.2}, {"celebrate", 2.7}, {"celebrated", 2.7}, {"admire", 2.1},
      {"incredible", 2.3}, {"tremendous", 2.4}, {"fantastic", 2.6}, {"greatest", 3.2},
      {"blessed", 2.9}, {"faith", 1.8}, {"loyal", 2.1}, {"noble", 2.0}, {"secure", 1.4},
      {"prosperity", 2.4}, {"prosper", 2.1}, {"thriving", 2.4}, {"triumph", 3.0},
      {"inspiring", 2.6}, {"respect", 2.1}, {"respected", 2.1}, {"wise", 1.8},
      {"genius", 1.9}, {"brilliant", 2.8}, {"perfect", 2.7}, {"positive", 2.6},
      {"joy", 2.8}, {"grateful", 2.0}, {"thank", 1.5}, {"thanks", 1.9}, {"nice", 1.8},
      {"kind", 2.4}, {"care", 2.2}, {"caring", 2.2}, {"healthy", 1.7}, {"agree", 1.5},
      {"correct", 1.3}, {"legitimate", 0.8}, {"innocent", 1.4}, {"united", 1.8},
      {"unity", 1.9}, {"rescue", 2.3}, {"saved", 2.0}, {"save", 2.2}, {"improve", 1.9},
      {"improved", 2.1}, {"powerful", 1.8}, {"true", 2.0}, {"fun", 2.3}, {"like", 1.5},
      {"comfort", 1.5}, {"calm", 1.3}, {"promise", 1.3}, {"effective", 2.1},
      // negative
      {"bad", -2.5}, {"terrible", -2.1}, {"horrible", -2.5}, {"awful", -2.0},
      {"evil", -3.4}, {"corrupt", -2.7}, {"corruption", -2.8}, {"lie", -1.8},
      {"lies", -1.8}, {"lied", -1.6}, {"liar", -2.7}, {"liars", -2.6}, {"lying", -2.4},
      {"hate", -2.7}, {"hatred", -3.2}, {"hates", -1.9}, {"fear", -2.2}, {"fears", -1.8},
      {"afraid", -2.0}, {"threat", -2.4}, {"threats", -1.8}, {"threaten", -2.4},
      {"threatens", -2.0}, {"attack", -2.1}, {"attacks", -1.9}, {"attacked", -2.0},
      {"kill", -3.7}, {"killed", -3.5}, {"killing", -3.4}, {"kills", -2.5},
      {"murder", -3.6}, {"murdered", -3.6}, {"war", -2.9}, {"terror", -3.2},
      {"terrorist", -3.7}, {"terrorists", -3.1}, {"disaster", -3.1}, {"crisis", -3.1},
      {"danger", -2.4}, {"dangerous", -2.1}, {"destroy", -2.6}, {"destroyed", -2.7},
      {"destroying", -2.6}, {"destruction", -2.7}, {"death", -2.9}, {"dead", -3.3},
      {"die", -2.9}, {"died", -2.6}, {"violence", -3.1}, {"violent", -2.9},
      {"criminal", -2.4}, {"criminals", -2.7}, {"crime", -2.5}, {"crimes", -2.5},
      {"fraud", -2.8}, {"fake", -2.1}, {"shameful", -2.5}, {"shame", -2.1},
      {"disgrace", -2.9}, {"disgraceful", -2.9}, {"disgusting", -2.4}, {"stupid", -2.4},
      {"idiot", -2.3}, {"idiots", -2.4}, {"fool", -1.9}, {"fools", -2.2},
      {"traitor", -2.9}, {"traitors", -2.9}, {"treason", -2.8}, {"enemy", -2.5},
      {"enemies", -2.2}, {"extremist", -2.2}, {"extremists", -2.3}, {"angry", -2.3},
      {"anger", -2.7}, {"outrage", -2.7}, {"outrageous", -2.0}, {"scandal", -2.1},
      {"catastrophe", -3.4}, {"catastrophic", -3.0}, {"chaos", -2.7}, {"collapse", -2.2},
      {"fail", -2.5}, {"failed", -2.3}, {"failure", -2.3}, {"failing", -2.3},
      {"weak", -1.9}, {"worst", -3.1}, {"worse", -2.1}, {"wrong", -2.1}, {"guilty", -1.8},
      {"abuse", -3.2}, {"abused", -2.3}, {"victim", -2.2}, {"victims", -2.4},
      {"poor", -2.1}, {"sad", -2.1}, {"problem", -1.7}, {"problems", -1.7},
      {"tyranny", -2.8}, {"tyrant", -2.9}, {"dictator", -2.4}, {"hoax", -1.9},
      {"illegal", -2.6}, {"betray", -2.8}, {"betrayed", -2.9}, {"betrayal", -2.9},
      {"cruel", -2.8}, {"brutal", -3.1}, {"savage", -2.0}, {"monster", -1.9},
      {"monsters", -2.0}, {"insane", -1.7}, {"crazy", -1.4}, {"ridiculous", -1.5},
      {"absurd", -1.3}, {"pathetic", -2.1}, {"vicious", -2.8}, {"hostile", -2.2},
      {"invasion", -2.3}, {"invade", -2.2}, {"invaders", -2.4}, {"slaughter", -3.5},
      {"massacre", -3.6}, {"genocide", -3.8}, {"nazi", -3.0}, {"nazis", -3.0},
      {"racist", -3.1}, {"thug", -2.3}, {"thugs", -2.6}, {"radical", -1.2},
      {"dishonest", -2.7}, {"deceit", -2.6}, {"deceive", -2.2}, {"deceptive", -2.2},
      {"cheat", -2.4}, {"cheated", -2.5}, {"steal", -2.3}, {"stolen", -2.2},
      {"rigged", -2.3}, {"propaganda", -1.3}, {"conspiracy", -1.4}, {"sick", -2.3},
      {"deadly", -2.9}, {"toxic", -2.5}, {"horror", -2.7}, {"horrific", -3.4},
      {"nightmare", -2.8}, {"panic", -2.3}, {"doom", -1.7}, {"disease", -2.1},
      {"harm", -2.5}, {"hurt", -2.4}, {"pain", -2.3}, {"suffer", -2.5},
      {"suffering", -2.1}, {"lost", -1.3}, {"loss", -1.3}, {"losing", -1.6},
      {"lose", -1.7}, {"blame", -1.4}, {"blamed", -2.1}, {"accuse", -1.8},
      {"accused", -1.9}, {"condemn", -1.6}, {"condemned", -1.9}, {"ugly", -2.3},
      {"dirty", -1.9}, {"disastrous", -2.9}, {"unfair", -2.1}, {"injustice", -2.7},
      {"oppression", -2.9}, {"regime", -1.1}, {"riot", -2.6}, {"riots", -2.6},
      {"mob", -1.8}, {"lunatic", -2.2}, {"sinister", -2.7}, {"wicked", -2.4},
      {"evil-doers", -3.0}, {"worthless", -1.9}, {"useless", -1.8}, {"incompetent", -2.2},
      {"sham", -2.0}, {"lawless", -2.3}, {"alarming", -2.0}, {"shocking", -1.6},
      {"bloody", -1.9}, {"infected", -2.2}, {"threatening", -2.0}, {"destroys", -2.4}};
  return lexicon;
}

const std::unordered_set<std::string>& negators() {
  static const std::unordered_set<std::string> words{
      "not",    "no",      "never",  "none",    "nobody",  "nothing",  "neither",
      "nor",    "without", "isn't",  "aren't",  "wasn't",  "weren't",  "don't",
      "doesn't", "didn't", "can't",  "cannot",  "won't",   "wouldn't", "shouldn't",
      "couldn't", "hasn't", "haven't", "hadn't", "ain't",  "nowhere",  "hardly"};
  return words;
}

const std::unordered_map<std::string, double>& boosters() {
  static const std::unordered_map<std::string, double> words{
      {"very", 1.3},       {"extremely", 1.3},  {"really", 1.3},    {"so", 1.3},
      {"totally", 1.3},    {"absolutely", 1.3}, {"completely", 1.3}, {"incredibly", 1.3},
      {"highly", 1.3},     {"deeply", 1.3},     {"truly", 1.3},      {"utterly", 1.3},
      {"most", 1.3},       {"especially", 1.3}, {"entirely", 1.3},   {"enormously", 1.3},
      {"slightly", 0.7},   {"somewhat", 0.7},   {"barely", 0.7},     {"marginally", 0.7},
      {"partly", 0.7},     {"occasionally", 0.7}, {"little", 0.7},   {"mildly", 0.7}};
  return words;
}

bool is_all_caps(const std::string& token) {
  bool has_alpha = false;
  for (char c : token) {
    const auto u = static_cast<unsigned char>(c);
    if (std::islower(u)) return false;
    if (std::isupper(u)) has_alpha = true;
  }
  return has_alpha;
}

// ---------------------------------------------------------------------------------------------
// Chunker

enum class Pos {
  Det,
  PossPron,
  Pron,
  Num,
  Modal,
  Aux,
  Verb,
  Prep,
  To,
  Conj,
  Sub,
  WhNoun,
  WhAdv,
  Adverb,
  Particle,
  Interj,
  Adj,
  Noun,
  Punct,
  Symbol,
};

const std::unordered_map<std::string, Pos>& closed_class() {
  static const std::unordered_map<std::string, Pos> words = [] {
    std::unordered_map<std::string, Pos> m;
    for (auto w : {"the", "a", "an", "this", "these", "those", "every", "each", "some", "any",
                   "no", "all", "both", "another", "such", "either", "neither", "many", "few",
                   "several", "much", "more", "most"}) {
      m[w] = Pos::Det;
    }
    for (auto w : {"my", "your", "his", "her", "its", "our", "their"}) m[w] = Pos::PossPron;
    for (auto w : {"i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them",
                   "himself", "herself", "itself", "themselves", "ourselves", "myself",
                   "yourself", "someone", "anyone", "everyone", "nobody", "everybody",
                   "something", "anything", "nothing", "everything", "mine", "yours",
                   "theirs", "ours", "hers"}) {
      m[w] = Pos::Pron;
    }
    for (auto w : {"one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
                   "ten", "eleven", "twelve", "twenty", "thirty", "forty", "fifty", "hundred",
                   "hundreds", "thousand", "thousands", "million", "millions", "billion",
                   "billions", "trillion", "dozen", "dozens"}) {
      m[w] = Pos::Num;
    }
    for (auto w : {"can", "could", "will", "would", "shall", "should", "may", "might", "must",
                   "won't", "wouldn't", "can't", "cannot", "couldn't", "shouldn't"}) {
      m[w] = Pos::Modal;
    }
    for (auto w : {"is", "am", "are", "was", "were", "be", "been", "being", "have", "has",
                   "had", "do", "does", "did", "isn't", "aren't", "wasn't", "weren't",
                   "don't", "doesn't", "didn't", "hasn't", "haven't", "hadn't", "it's",
                   "that's", "there's"}) {
      m[w] = Pos::Aux;
    }
    for (auto w : {"of", "in", "on", "at", "by", "for", "with", "from", "into", "about",
                   "over", "under", "after", "before", "between", "through", "during",
                   "against", "without", "within", "among", "across", "behind", "beyond",
                   "upon", "toward", "towards", "onto", "via", "per", "despite", "amid",
                   "like", "near", "inside", "outside", "around", "along", "than", "as"}) {
      m[w] = Pos::Prep;
    }
    m["to"] = Pos::To;
    for (auto w : {"and", "or", "but", "nor", "yet", "&"}) m[w] = Pos::Conj;
    for (auto w : {"because", "although", "though", "if", "unless", "while", "whereas",
                   "since", "until", "whether", "once", "so-called"}) {
      m[w] = Pos::Sub;
    }
    for (auto w : {"who", "whom", "what", "which", "whose", "whoever", "whatever"}) {
      m[w] = Pos::WhNoun;
    }
    for (auto w : {"where", "when", "why", "how", "wherever", "whenever"}) m[w] = Pos::WhAdv;
    for (auto w : {"not", "never", "very", "really", "also", "just", "only", "even", "still",
                   "already", "always", "often", "too", "quite", "rather", "almost", "soon",
                   "now", "then", "here", "there", "again", "ever", "perhaps", "yet", "so",
                   "however", "instead", "indeed", "therefore", "thus", "meanwhile", "later",
                   "once", "far", "well", "n't", "else", "ago", "nevertheless"}) {
      if (!m.contains(w)) m[w] = Pos::Adverb;
    }
    for (auto w : {"oh", "wow", "hey", "alas", "ah", "yeah", "ouch", "hooray", "oops",
                   "yes", "okay", "ok", "please"}) {
      m[w] = Pos::Interj;
    }
    for (auto w : {"said", "says", "say", "told", "tell", "tells", "claim", "claims",
                   "believe", "believes", "think", "thinks", "thought", "know", "knows",
                   "knew", "want", "wants", "go", "goes", "went", "gone", "come", "comes",
                   "came", "make", "makes", "made", "take", "takes", "took", "taken", "get",
                   "gets", "got", "see", "sees", "saw", "seen", "give", "gives", "gave",
                   "given", "find", "finds", "found", "leave", "leaves", "left", "feel",
                   "feels", "felt", "become", "becomes", "became", "begin", "began", "keep",
                   "keeps", "kept", "hold", "holds", "held", "bring", "brings", "brought",
                   "stand", "stands", "stood", "run", "runs", "ran", "write", "writes",
                   "wrote", "written", "meet", "met", "pay", "paid", "send", "sent", "build",
                   "built", "lose", "lost", "win", "won", "fall", "fell", "lead", "leads",
                   "led", "read", "speak", "speaks", "spoke", "choose", "chose", "break",
                   "broke", "drive", "drove", "eat", "ate", "grow", "grew", "throw", "threw",
                   "fly", "flew", "hit", "put", "set", "cut", "let", "shut", "sit", "sits",
                   "sat", "lie", "lies", "lay", "rise", "rose", "hide", "hid", "fight",
                   "fought", "sell", "sold", "buy", "bought", "teach", "taught", "seek",
                   "sought", "warn", "warns", "vote", "votes", "need", "needs", "seem",
                   "seems", "look", "looks", "hate", "hates", "love", "loves", "fear",
                   "fears", "deny", "denies", "destroy", "destroys", "kill", "kills",
                   "attack", "attacks", "threaten", "threatens", "support", "supports",
                   "refuse", "refuses", "try", "tries", "show", "shows", "shown", "ask",
                   "asks", "call", "calls", "use", "uses", "work", "works", "live", "lives",
                   "act", "acts", "add", "adds", "allow", "allows", "help", "helps", "let's",
                   "must've", "admit", "admits", "insist", "insists", "wonder", "suggest",
                   "suggests", "reveal", "reveals", "accuse", "accuses", "blame", "blames"}) {
      if (!m.contains(w)) m[w] = Pos::Verb;
    }
    for (auto w : {"new", "old", "big", "small", "large", "good", "bad", "great", "high",
                   "low", "long", "short", "young", "true", "false", "real", "free", "full",
                   "whole", "same", "other", "own", "right", "wrong", "left", "early",
                   "late", "last", "next", "first", "second", "third", "few", "little",
                   "public", "political", "national", "american", "foreign", "federal",
                   "military", "illegal", "evil", "corrupt", "fake", "dead", "safe",
                   "strong", "weak", "poor", "rich", "happy", "sad", "angry", "huge",
                   "major", "local", "global", "social", "black", "white", "clear",
                   "important", "possible", "likely", "sure", "best", "worst", "better",
                   "worse", "terrible", "horrible", "stupid", "crazy", "brutal", "radical",
                   "secret", "main", "top", "special", "recent", "former", "current"}) {
      if (!m.contains(w)) m[w] = Pos::Adj;
    }
    for (auto w : {"up", "out", "off", "down", "away", "back"}) m[w] = Pos::Particle;
    return m;
  }();
  return words;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(),
                                                suffix) == 0;
}

Pos guess_pos(const std::string& token, const std::string& lower) {
  const auto first = static_cast<unsigned char>(token[0]);
  if (!is_word_char(first)) {
    static const std::string_view kPunct = ".,;:!?\"'()[]{}-";
    return kPunct.find(static_cast<char>(first)) != std::string_view::npos ? Pos::Punct
                                                                         : Pos::Symbol;
  }
  if (first >= 0x80) return Pos::Symbol;
  if (std::all_of(token.begin(), token.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == ',' || c == '-';
      })) {
    return Pos::Num;
  }
  if (auto it = closed_class().find(lower); it != closed_class().end()) return it->second;
  if (lower.size() > 4 && ends_with(lower, "ly")) return Pos::Adverb;
  if (lower.size() > 4 && (ends_with(lower, "ed") || ends_with(lower, "ize") ||
                           ends_with(lower, "ise") || ends_with(lower, "izes"))) {
    return Pos::Verb;
  }
  if (lower.size() > 5 && ends_with(lower, "ing")) return Pos::Verb;
  if (lower.size() > 4 &&
      (ends_with(lower, "ous") || ends_with(lower, "ful") || ends_with(lower, "ive") ||
       ends_with(lower, "able") || ends_with(lower, "ible") || ends_with(lower, "less") ||
       ends_with(lower, "ical") || ends_with(lower, "ish") || ends_with(lower, "ic"))) {
    return Pos::Adj;
  }
  return Pos::Noun;
}

bool is_nominal(Pos p) {
  return p == Pos::Det || p == Pos::PossPron || p == Pos::Num || p == Pos::Adj ||
         p == Pos::Noun || p == Pos::Pron;
}

bool is_verbal(Pos p) { return p == Pos::Modal || p == Pos::Aux || p == Pos::Verb; }

bool is_reporting_verb(const std::string& lower) {
  return lower == "said" || lower == "says" || lower == "added" || lower == "told" ||
         lower == "wrote" || lower == "asked" || lower == "claimed" || lower == "explained" ||
         lower == "noted" || lower == "warned" || lower == "continued" || lower == "stated";
}

}  // namespace

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& token : raw_tokens(text)) {
    if (is_alpha_word(token)) out.push_back(to_lower(token));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

HashingEncoder::HashingEncoder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw ValidationError("encoder dimension must be positive");
}

SentenceEncoding HashingEncoder::encode(std::string_view text) {
  SentenceEncoding out{std::vector<double>(dimension_, 0.0)};
  if (text.empty()) return out;
  const std::string padded = " " + to_lower(text) + " ";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    const std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, 3));
    const double sign = (h >> 63) ? -1.0 : 1.0;
    out.vector[h % dimension_] += sign;
  }
  double norm = 0.0;
  for (double v : out.vector) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& v : out.vector) v /= norm;
  }
  return out;
}

StanceDistribution LexicalStanceClassifier::stance(std::string_view sentence,
                                                   std::string_view title) {
  const auto sentence_tokens = word_tokens(sentence);
  const auto s = content_words(sentence_tokens);
  const auto t = content_words(word_tokens(title));
  std::size_t common = 0;
  for (const auto& w : s) common += t.contains(w);
  const std::size_t unioned = s.size() + t.size() - common;
  const double overlap = unioned == 0 ? 0.0 : static_cast<double>(common) / unioned;

  double neg = 0.0;
  double hedge = sentence.find('?') != std::string_view::npos ? 1.0 : 0.0;
  for (const auto& w : sentence_tokens) {
    if (negation_cues().contains(w)) neg = 1.0;
    if (hedge_cues().contains(w)) hedge = 1.0;
  }

  const double logits[4] = {
      1.0 - 6.0 * overlap,
      5.0 * overlap - 2.0 * neg - hedge,
      5.0 * overlap * neg + neg - 1.5,
      4.0 * overlap + 1.5 * hedge - 1.0,
  };
  const double peak = *std::max_element(std::begin(logits), std::end(logits));
  double e[4];
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    e[i] = std::exp(logits[i] - peak);
    total += e[i];
  }
  StanceDistribution dist;
  dist.unrelated = e[0] / total;
  dist.agree = e[1] / total;
  dist.disagree = e[2] / total;
  dist.discuss = e[3] / total;
  return dist;
}

SyntaxProfile ReferenceChunker::syntax(std::string_view sentence) {
  SyntaxProfile profile;
  const auto tokens = raw_tokens(sentence);
  if (tokens.empty()) {
    if (!sentence.empty()) profile["unknown"] = 1;
    return profile;
  }

  const std::size_t n = tokens.size();
  std::vector<std::string> lower(n);
  std::vector<Pos> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    lower[i] = to_lower(tokens[i]);
    pos[i] = guess_pos(tokens[i], lower[i]);
  }
  // Context fixes: "that" after a verb introduces a clause; an open-class word right after a
  // modal, "to" or a subject pronoun is read as a verb.
  for (std::size_t i = 0; i < n; ++i) {
    if (lower[i] == "that") {
      pos[i] = (i > 0 && is_verbal(pos[i - 1])) ? Pos::Sub : Pos::Det;
      if (i + 1 < n && (is_verbal(pos[i + 1]) || pos[i + 1] == Pos::Adverb)) pos[i] = Pos::Pron;
    }
    if (i > 0 && (pos[i] == Pos::Noun || pos[i] == Pos::Adj) &&
        (pos[i - 1] == Pos::Modal || pos[i - 1] == Pos::To ||
         (pos[i - 1] == Pos::Pron && i + 1 < n && pos[i + 1] != Pos::Verb))) {
      pos[i] = Pos::Verb;
    }
  }

  std::vector<bool> covered(n, false);
  bool has_vp = false;
  int embedded_clauses = 0;

  auto first_word = std::find_if(pos.begin(), pos.end(), [](Pos p) { return p != Pos::Punct; });
  const std::size_t first = static_cast<std::size_t>(first_word - pos.begin());

  // List marker: "1." / "2)" / "a)" / "-" / "*" at the start.
  if (first < n && ((pos[first] == Pos::Num && first + 1 < n &&
                     (tokens[first + 1] == "." || tokens[first + 1] == ")")) ||
                    (first == 0 && (tokens[0] == "-" || tokens[0] == "*")))) {
    ++profile["LST"];
    covered[first] = true;
  }

  int paren_depth = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (tokens[i] == "(") {
      ++paren_depth;
      ++profile["PRN"];
    } else if (tokens[i] == ")" && paren_depth > 0) {
      --paren_depth;
    }
  }

  std::size_t i = 0;
  while (i < n) {
    const Pos p = pos[i];
    if (covered[i] || p == Pos::Punct) {
      ++i;
      continue;
    }

    // Multi-word conjunctions.
    if (i + 2 < n && lower[i] == "as" && lower[i + 1] == "well" && lower[i + 2] == "as") {
      ++profile["CONJP"];
      covered[i] = covered[i + 1] = covered[i + 2] = true;
      i += 3;
      continue;
    }
    if (i + 1 < n && ((lower[i] == "rather" && lower[i + 1] == "than") ||
                      (lower[i] == "not" && lower[i + 1] == "only"))) {
      ++profile["CONJP"];
      covered[i] = covered[i + 1] = true;
      i += 2;
      continue;
    }

    if (p == Pos::Interj) {
      ++profile["INTJ"];
      covered[i] = true;
      ++i;
      continue;
    }

    if (p == Pos::WhNoun || p == Pos::WhAdv) {
      const bool pied_piped = i > 0 && pos[i - 1] == Pos::Prep && !covered[i - 1];
      if (pied_piped) {
        ++profile["WHPP"];
        covered[i - 1] = true;
      }
      if (lower[i] == "how" && i + 1 < n &&
          (pos[i + 1] == Pos::Adj || lower[i + 1] == "much" || lower[i + 1] == "many")) {
        ++profile["WHADJP"];
        covered[i + 1] = true;
      } else if (p == Pos::WhAdv) {
        ++profile["WHADVP"];
      } else {
        ++profile["WHNP"];
        if (lower[i] == "whose" && i + 1 < n && pos[i + 1] == Pos::Noun) covered[i + 1] = true;
      }
      covered[i] = true;
      if (i > first) {
        ++profile["SBAR"];
        ++embedded_clauses;
      }
      ++i;
      continue;
    }

    if (p == Pos::Sub) {
      ++profile["SBAR"];
      ++embedded_clauses;
      covered[i] = true;
      ++i;
      continue;
    }

    if (is_verbal(p) || (p == Pos::To && i + 1 < n && is_verbal(pos[i + 1]))) {
      std::size_t j = i;
      while (j < n && (is_verbal(pos[j]) || pos[j] == Pos::To ||
                       (pos[j] == Pos::Adverb && j + 1 < n && is_verbal(pos[j + 1])) ||
                       lower[j] == "not" || lower[j] == "n't")) {
        if (pos[j] == Pos::To && !(j + 1 < n && is_verbal(pos[j + 1]))) break;
        covered[j] = true;
        ++j;
      }
      ++profile["VP"];
      has_vp = true;
      // Particle: "give up", "shut down" when no noun phrase follows directly.
      if (j < n && pos[j] == Pos::Particle &&
          (j + 1 >= n || !is_nominal(pos[j + 1]) || pos[j + 1] == Pos::Pron)) {
        ++profile["PRT"];
        covered[j] = true;
        ++j;
      }
      i = j;
      continue;
    }

    if (p == Pos::Prep || p == Pos::To || p == Pos::Particle) {
      std::size_t j = i + 1;
      if (j < n && is_nominal(pos[j])) {
        ++profile["PP"];
        covered[i] = true;
        ++i;
        continue;
      }
      if (j < n && (pos[j] == Pos::WhNoun || pos[j] == Pos::WhAdv)) {
        ++i;  // handled as WHPP
        continue;
      }
      ++profile[p == Pos::Particle ? "ADVP" : "PP"];
      covered[i] = true;
      ++i;
      continue;
    }

    if (p == Pos::Adverb) {
      std::size_t j = i;
      while (j < n && pos[j] == Pos::Adverb) covered[j++] = true;
      if (j < n && pos[j] == Pos::Adj &&
          !(j + 1 < n && (pos[j + 1] == Pos::Noun || pos[j + 1] == Pos::Num))) {
        while (j < n && pos[j] == Pos::Adj) covered[j++] = true;
        ++profile["ADJP"];
      } else {
        ++profile["ADVP"];
      }
      i = j;
      continue;
    }

    if (is_nominal(p)) {
      std::size_t j = i;
      bool has_head = false;
      int numbers = 0;
      bool money = i > 0 && tokens[i - 1] == "$";
      while (j < n) {
        const Pos q = pos[j];
        if (q == Pos::Pron) {
          if (j > i && has_head) break;
          has_head = true;
          covered[j++] = true;
          if (lower[j - 1] != "'s") break;
          continue;
        }
        if (q == Pos::Det || q == Pos::PossPron || q == Pos::Adj || q == Pos::Noun ||
            q == Pos::Num) {
          if (q == Pos::Noun || q == Pos::Num) has_head = true;
          if (q == Pos::Num) ++numbers;
          if (q == Pos::Det && j > i && has_head) break;
          covered[j++] = true;
          continue;
        }
        if (tokens[j] == "%" || tokens[j] == "$") {
          covered[j++] = true;
          continue;
        }
        break;
      }
      if (has_head) {
        ++profile["NP"];
        if (numbers >= 2 || (numbers >= 1 && money)) ++profile["QP"];
      } else {
        ++profile["ADJP"];
      }
      // Unlike coordination: adjective "and" noun.
      if (j + 1 < n && pos[j] == Pos::Conj && pos[j - 1] == Pos::Adj &&
          pos[j + 1] == Pos::Noun) {
        ++profile["UCP"];
      }
      i = j;
      continue;
    }

    if (p == Pos::Conj) {
      // A coordinator followed by a fresh verb group after an earlier one joins two clauses.
      if (has_vp) {
        for (std::size_t k = i + 1; k < n && k <= i + 4; ++k) {
          if (is_verbal(pos[k])) {
            ++embedded_clauses;
            break;
          }
          if (pos[k] == Pos::Conj || pos[k] == Pos::Punct) break;
        }
      }
      covered[i] = true;
      ++i;
      continue;
    }

    // Symbols and anything else no rule claimed.
    ++profile["unknown"];
    covered[i] = true;
    ++i;
  }

  // Root clause.
  std::size_t last = n;
  while (last > 0 && (tokens[last - 1] == "\"" || tokens[last - 1] == "'" ||
                      tokens[last - 1] == ")")) {
    --last;
  }
  const bool question = last > 0 && tokens[last - 1] == "?";
  bool inverted = false;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if ((tokens[k - 1] == "," || tokens[k - 1] == "\"") && is_reporting_verb(lower[k]) &&
        is_nominal(pos[k + 1]) && pos[k + 1] != Pos::Pron) {
      inverted = true;
      break;
    }
  }
  if (first < n && question && (pos[first] == Pos::WhNoun || pos[first] == Pos::WhAdv)) {
    ++profile["SBARQ"];
    ++profile["SQ"];
  } else if (first < n && question && (pos[first] == Pos::Aux || pos[first] == Pos::Modal)) {
    ++profile["SQ"];
  } else if (inverted) {
    ++profile["SINV"];
  } else if (has_vp) {
    ++profile["S"];
  } else {
    ++profile["FRAG"];
  }
  profile["S"] += embedded_clauses;
  return profile;
}

SentimentScores LexiconSentimentAnalyzer::sentiment(std::string_view sentence) {
  const auto tokens = raw_tokens(sentence);
  std::vector<std::string> words;
  bool any_lower = false;
  for (const auto& t : tokens) {
    if (!is_alpha_word(t)) continue;
    words.push_back(t);
    if (std::any_of(t.begin(), t.end(),
                    [](char c) { return std::islower(static_cast<unsigned char>(c)); })) {
      any_lower = true;
    }
  }
  SentimentScores out;
  if (words.empty()) return out;

  std::vector<double> valences(words.size(), 0.0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string lower = to_lower(words[i]);
    auto it = sentiment_lexicon().find(lower);
    if (it == sentiment_lexicon().end()) continue;
    double v = it->second;
    if (any_lower && is_all_caps(words[i])) v += v > 0 ? 0.733 : -0.733;
    if (i > 0) {
      auto boost = boosters().find(to_lower(words[i - 1]));
      if (boost != boosters().end()) v *= boost->second;
    }
    for (std::size_t back = 1; back <= 3 && back <= i; ++back) {
      if (negators().contains(to_lower(words[i - back]))) {
        v *= -0.74;
        break;
      }
    }
    valences[i] = v;
  }

  double sum = 0.0;
  for (double v : valences) sum += v;
  const auto bangs = std::count(sentence.begin(), sentence.end(), '!');
  const double emphasis = 0.292 * static_cast<double>(std::min<std::ptrdiff_t>(bangs, 4));
  if (sum > 0) sum += emphasis;
  if (sum < 0) sum -= emphasis;

  double pos_sum = 0.0;
  double neg_sum = 0.0;
  double neutral = 0.0;
  for (double v : valences) {
    if (v > 0) pos_sum += v + 1.0;
    else if (v < 0) neg_sum += -v + 1.0;
    else neutral += 1.0;
  }
  const double total = pos_sum + neg_sum + neutral;
  out.positive = pos_sum / total;
  out.negative = neg_sum / total;
  out.neutral = neutral / total;
  out.compound = std::clamp(sum / std::sqrt(sum * sum + 15.0), -1.0, 1.0);
  return out;
}

SentimentDocumentScorer::SentimentDocumentScorer(std::shared_ptr<SentimentAnalyzer> sentiment)
    : sentiment_(sentiment ? std::move(sentiment)
                           : std::make_shared<LexiconSentimentAnalyzer>()) {}

DocScore SentimentDocumentScorer::doc_score(const Article& article) {
  double total = 0.0;
  for (const auto& s : article.sentences) total += std::fabs(sentiment_->sentiment(s.text).compound);
  const double mean =
      article.sentences.empty() ? 0.0 : total / static_cast<double>(article.sentences.size());
  return {1.0 / (1.0 + std::exp(-mean))};
}

Providers make_reference_providers(std::size_t dimension) {
  Providers p;
  auto sentiment = std::make_shared<LexiconSentimentAnalyzer>();
  p.encoder = std::make_shared<HashingEncoder>(dimension);
  p.stance = std::make_shared<LexicalStanceClassifier>();
  p.syntax = std::make_shared<ReferenceChunker>();
  p.sentiment = sentiment;
  p.document = std::make_shared<SentimentDocumentScorer>(sentiment);
  return p;
}

}  // namespace propdetect
