#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace memharvest::html {

struct Attribute {
  std::string name;   // lowercase
  std::string value;  // entity-decoded, case preserved

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

struct Token {
  enum class Type { kStartTag, kEndTag, kText, kComment, kDoctype };

  Type type = Type::kText;
  std::string name;  // tag name, lowercase
  std::vector<Attribute> attributes;
  bool self_closing = false;
  std::string data;  // text (entity-decoded), comment or doctype body
  std::size_t offset = 0;  // byte offset of the token in the input

  const std::string* attribute(std::string_view name) const;
};

// Streaming tokenizer over UTF-8 (or any ASCII-compatible) input. Handles
// raw-text elements (script, style, ...) and RCDATA (title, textarea) the way
// browsers do, so markup-looking bytes inside them never become tags.
class Tokenizer {
 public:
  explicit Tokenizer(std::string_view input) : input_(input) {}

  std::optional<Token> next();

 private:
  std::optional<Token> read_markup();
  Token read_text();
  Token read_raw_text(bool decode);
  std::optional<Token> read_tag(bool end_tag);

  std::string_view input_;
  std::size_t pos_ = 0;
  std::string raw_text_end_;  // non-empty while inside a raw text element
  bool raw_text_decode_ = false;
};

// Decodes character references in text. In attribute values a missing ';'
// never terminates a reference.
std::string decode_entities(std::string_view text, bool in_attribute = false);

void append_utf8(std::string& out, char32_t code_point);

bool is_void_element(std::string_view name);

class Node {
 public:
  enum class Type { kDocument, kElement, kText, kComment };

  explicit Node(Type type) : type_(type) {}
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  Type type() const { return type_; }
  bool is_element(std::string_view name) const { return type_ == Type::kElement && name_ == name; }

  const std::string& name() const { return name_; }
  const std::vector<Attribute>& attributes() const { return attributes_; }
  const std::string* attribute(std::string_view name) const;
  const std::string& data() const { return data_; }

  Node* parent() const { return parent_; }
  const std::vector<std::unique_ptr<Node>>& children() const { return children_; }

  std::unique_ptr<Node> clone() const;

 private:
  friend class TreeBuilder;
  friend class Document;

  Node* append(std::unique_ptr<Node> child);

  Type type_;
  std::string name_;
  std::vector<Attribute> attributes_;
  std::string data_;
  Node* parent_ = nullptr;
  std::vector<std::unique_ptr<Node>> children_;
};

// A single DOM tree with deterministic error recovery: implied end tags for
// p/li/dt/dd/option/table parts, end tags matched within scope (stray ones
// ignored), void elements never opened, and whitespace-only text outside
// body content dropped.
class Document {
 public:
  Document();
  Document(const Document& other);
  Document& operator=(const Document& other);
  Document(Document&&) noexcept = default;
  Document& operator=(Document&&) noexcept = default;

  static Document parse(std::string_view utf8);

  const Node& root() const { return *root_; }

  // Removes every element subtree for which pred is true. Returns the number
  // of subtrees removed (nested matches inside a removed subtree not counted).
  std::size_t remove_elements(const std::function<bool(const Node&)>& pred);

  // Visits nodes in document order.
  void walk(const std::function<void(const Node&)>& visit) const;

  // Concatenation of all text nodes in document order.
  std::string text_content() const;

  // Canonical markup serialization, used to compare trees.
  std::string serialize() const;

  friend bool operator==(const Document& a, const Document& b) { return a.serialize() == b.serialize(); }

 private:
  friend class TreeBuilder;
  std::unique_ptr<Node> root_;
};

}  // namespace memharvest::html
