#include "memharvest/html.h"

#include <algorithm>
#include <array>
#include <cctype>

#include "html_entities.h"

namespace memharvest::html {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_alnum(char c) {
  return is_alpha(c) || (c >= '0' && c <= '9');
}

char lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = lower(c);
  return out;
}

template <std::size_t N>
bool one_of(std::string_view name, const std::array<std::string_view, N>& set) {
  return std::find(set.begin(), set.end(), name) != set.end();
}

constexpr std::array<std::string_view, 18> kVoidElements = {
    "area", "base", "basefont", "bgsound", "br", "col", "embed", "frame", "hr",
    "img", "input", "isindex", "keygen", "link", "meta", "param", "source", "track"};

constexpr std::array<std::string_view, 7> kRawTextElements = {
    "script", "style", "xmp", "iframe", "noembed", "noframes", "plaintext"};

constexpr std::array<std::string_view, 2> kRcdataElements = {"title", "textarea"};

// Start tags that implicitly close an open <p>.
constexpr std::array<std::string_view, 37> kClosesParagraph = {
    "address", "article", "aside", "blockquote", "center", "details", "dialog", "dir",
    "div", "dl", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2",
    "h3", "h4", "h5", "h6", "header", "hgroup", "hr", "main", "menu", "nav", "ol",
    "p", "pre", "section", "summary", "table", "ul", "li", "dd", "dt"};

// Elements that bound the search for a matching end tag.
constexpr std::array<std::string_view, 10> kScopeBoundaries = {
    "html", "table", "td", "th", "caption", "marquee", "object", "applet", "template", "button"};

constexpr std::array<std::string_view, 10> kHeadContent = {
    "title", "meta", "link", "base", "script", "style", "noscript", "template", "basefont", "bgsound"};

// Deeper elements are inserted as siblings so that tree walks stay bounded.
constexpr std::size_t kMaxDepth = 512;

constexpr std::array<std::string_view, 6> kHeadings = {"h1", "h2", "h3", "h4", "h5", "h6"};

// Windows-1252 interpretation of numeric references in the C1 range.
constexpr std::array<char32_t, 32> kC1Replacements = {
    0x20AC, 0x0081, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0x008D, 0x017D, 0x008F, 0x0090, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0x009D, 0x017E, 0x0178};

char32_t sanitize_code_point(std::uint64_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
    return 0xFFFD;
  if (cp >= 0x80 && cp <= 0x9F)
    return kC1Replacements[cp - 0x80];
  return static_cast<char32_t>(cp);
}

}  // namespace

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string decode_entities(std::string_view text, bool in_attribute) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c != '&') {
      out.push_back(c);
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (j < text.size() && text[j] == '#') {
      ++j;
      bool hex = j < text.size() && (text[j] == 'x' || text[j] == 'X');
      if (hex)
        ++j;
      std::size_t digits_start = j;
      std::uint64_t value = 0;
      while (j < text.size() && (hex ? std::isxdigit(static_cast<unsigned char>(text[j]))
                                     : std::isdigit(static_cast<unsigned char>(text[j])))) {
        if (value <= 0x10FFFF) {
          char d = lower(text[j]);
          value = value * (hex ? 16 : 10) + static_cast<std::uint64_t>(d >= 'a' ? d - 'a' + 10 : d - '0');
        }
        ++j;
      }
      if (j == digits_start) {
        out.push_back('&');
        ++i;
        continue;
      }
      if (j < text.size() && text[j] == ';')
        ++j;
      append_utf8(out, sanitize_code_point(value));
      i = j;
      continue;
    }
    while (j < text.size() && j - i <= 32 && is_alnum(text[j]))
      ++j;
    std::string_view name = text.substr(i + 1, j - i - 1);
    bool terminated = j < text.size() && text[j] == ';';
    std::optional<char32_t> cp;
    if (!name.empty() && (terminated || !in_attribute))
      cp = lookup_entity(name);
    if (cp) {
      append_utf8(out, *cp);
      i = terminated ? j + 1 : j;
    } else {
      out.push_back('&');
      ++i;
    }
  }
  return out;
}

bool is_void_element(std::string_view name) {
  return one_of(name, kVoidElements);
}

const std::string* Token::attribute(std::string_view attr_name) const {
  for (const auto& a : attributes)
    if (a.name == attr_name)
      return &a.value;
  return nullptr;
}

// --- Tokenizer -------------------------------------------------------------

std::optional<Token> Tokenizer::next() {
  while (true) {
    if (!raw_text_end_.empty())
      return read_raw_text(raw_text_decode_);
    if (pos_ >= input_.size())
      return std::nullopt;
    if (input_[pos_] == '<') {
      std::size_t before = pos_;
      if (auto token = read_markup())
        return token;
      if (pos_ != before)
        continue;  // markup consumed without producing a token
    }
    return read_text();
  }
}

Token Tokenizer::read_text() {
  Token token;
  token.type = Token::Type::kText;
  token.offset = pos_;
  std::size_t end = input_.find('<', pos_ + 1);
  if (end == std::string_view::npos)
    end = input_.size();
  token.data = decode_entities(input_.substr(pos_, end - pos_));
  pos_ = end;
  return token;
}

Token Tokenizer::read_raw_text(bool decode) {
  Token token;
  token.type = Token::Type::kText;
  token.offset = pos_;
  std::size_t search = pos_;
  std::size_t end = input_.size();
  if (raw_text_end_ != "plaintext") {
    while (true) {
      std::size_t lt = input_.find("</", search);
      if (lt == std::string_view::npos)
        break;
      std::size_t name_end = lt + 2 + raw_text_end_.size();
      if (name_end <= input_.size() && lower(input_.substr(lt + 2, raw_text_end_.size())) == raw_text_end_ &&
          (name_end == input_.size() || is_space(input_[name_end]) || input_[name_end] == '/' ||
           input_[name_end] == '>')) {
        end = lt;
        break;
      }
      search = lt + 2;
    }
  }
  std::string_view raw = input_.substr(pos_, end - pos_);
  token.data = decode ? decode_entities(raw) : std::string(raw);
  pos_ = end;
  raw_text_end_.clear();
  return token;
}

std::optional<Token> Tokenizer::read_markup() {
  std::string_view rest = input_.substr(pos_);
  Token token;
  token.offset = pos_;

  if (rest.starts_with("<!--")) {
    std::size_t body = pos_ + 4;
    std::size_t close;
    if (input_.substr(body).starts_with(">")) {
      close = body;
      pos_ = body + 1;
    } else if (input_.substr(body).starts_with("->")) {
      close = body;
      pos_ = body + 2;
    } else {
      close = input_.find("-->", body);
      if (close == std::string_view::npos) {
        close = input_.size();
        pos_ = input_.size();
      } else {
        pos_ = close + 3;
      }
    }
    token.type = Token::Type::kComment;
    token.data = std::string(input_.substr(body, close - body));
    return token;
  }

  if (rest.starts_with("<!") || rest.starts_with("<?")) {
    std::size_t close = input_.find('>', pos_ + 2);
    std::size_t end = close == std::string_view::npos ? input_.size() : close;
    std::string_view body = input_.substr(pos_ + 2, end - pos_ - 2);
    pos_ = close == std::string_view::npos ? input_.size() : close + 1;
    bool doctype = rest[1] == '!' && lower(body.substr(0, 7)) == "doctype";
    token.type = doctype ? Token::Type::kDoctype : Token::Type::kComment;
    token.data = std::string(body);
    return token;
  }

  if (rest.size() >= 2 && rest[1] == '/') {
    if (rest.size() >= 3 && is_alpha(rest[2])) {
      pos_ += 2;
      return read_tag(true);
    }
    if (rest.size() >= 3 && rest[2] == '>') {
      pos_ += 3;
      return std::nullopt;
    }
    if (rest.size() == 2)
      return std::nullopt;
    // "</" followed by garbage is a bogus comment up to the next '>'.
    std::size_t close = input_.find('>', pos_ + 2);
    std::size_t end = close == std::string_view::npos ? input_.size() : close;
    token.type = Token::Type::kComment;
    token.data = std::string(input_.substr(pos_ + 2, end - pos_ - 2));
    pos_ = close == std::string_view::npos ? input_.size() : close + 1;
    return token;
  }

  if (rest.size() >= 2 && is_alpha(rest[1])) {
    pos_ += 1;
    return read_tag(false);
  }
  return std::nullopt;
}

std::optional<Token> Tokenizer::read_tag(bool end_tag) {
  Token token;
  token.type = end_tag ? Token::Type::kEndTag : Token::Type::kStartTag;
  token.offset = pos_ - (end_tag ? 2 : 1);

  std::size_t name_start = pos_;
  while (pos_ < input_.size() && !is_space(input_[pos_]) && input_[pos_] != '/' && input_[pos_] != '>')
    ++pos_;
  token.name = lower(input_.substr(name_start, pos_ - name_start));

  while (true) {
    while (pos_ < input_.size() && is_space(input_[pos_]))
      ++pos_;
    if (pos_ >= input_.size()) {
      // EOF inside a tag: the tag is dropped.
      Token dropped;
      dropped.type = Token::Type::kComment;
      dropped.offset = token.offset;
      return dropped;
    }
    char c = input_[pos_];
    if (c == '>') {
      ++pos_;
      break;
    }
    if (c == '/') {
      ++pos_;
      if (pos_ < input_.size() && input_[pos_] == '>') {
        token.self_closing = true;
        ++pos_;
        break;
      }
      continue;
    }

    std::size_t attr_start = pos_;
    ++pos_;  // the first character may be '='
    while (pos_ < input_.size() && !is_space(input_[pos_]) && input_[pos_] != '/' && input_[pos_] != '>' &&
           input_[pos_] != '=')
      ++pos_;
    Attribute attr{lower(input_.substr(attr_start, pos_ - attr_start)), {}};

    std::size_t after_name = pos_;
    while (pos_ < input_.size() && is_space(input_[pos_]))
      ++pos_;
    if (pos_ < input_.size() && input_[pos_] == '=') {
      ++pos_;
      while (pos_ < input_.size() && is_space(input_[pos_]))
        ++pos_;
      if (pos_ < input_.size() && (input_[pos_] == '"' || input_[pos_] == '\'')) {
        char quote = input_[pos_++];
        std::size_t close = input_.find(quote, pos_);
        std::size_t end = close == std::string_view::npos ? input_.size() : close;
        attr.value = decode_entities(input_.substr(pos_, end - pos_), true);
        pos_ = close == std::string_view::npos ? input_.size() : close + 1;
      } else {
        std::size_t value_start = pos_;
        while (pos_ < input_.size() && !is_space(input_[pos_]) && input_[pos_] != '>')
          ++pos_;
        attr.value = decode_entities(input_.substr(value_start, pos_ - value_start), true);
      }
    } else {
      pos_ = after_name;
    }
    if (!end_tag && token.attribute(attr.name) == nullptr)
      token.attributes.push_back(std::move(attr));
  }

  if (!end_tag) {
    if (one_of(token.name, kRawTextElements)) {
      raw_text_end_ = token.name;
      raw_text_decode_ = false;
      token.self_closing = false;
    } else if (one_of(token.name, kRcdataElements)) {
      raw_text_end_ = token.name;
      raw_text_decode_ = true;
      token.self_closing = false;
    }
  } else {
    token.self_closing = false;
  }
  return token;
}

// --- Node ------------------------------------------------------------------

const std::string* Node::attribute(std::string_view attr_name) const {
  for (const auto& a : attributes_)
    if (a.name == attr_name)
      return &a.value;
  return nullptr;
}

Node* Node::append(std::unique_ptr<Node> child) {
  child->parent_ = this;
  children_.push_back(std::move(child));
  return children_.back().get();
}

std::unique_ptr<Node> Node::clone() const {
  auto copy = std::make_unique<Node>(type_);
  copy->name_ = name_;
  copy->attributes_ = attributes_;
  copy->data_ = data_;
  for (const auto& child : children_)
    copy->append(child->clone());
  return copy;
}

// --- TreeBuilder -----------------------------------------------------------

class TreeBuilder {
 public:
  explicit TreeBuilder(Document& doc) : doc_(doc) { stack_.push_back(doc_.root_.get()); }

  void process(Token& token) {
    switch (token.type) {
      case Token::Type::kText:
        text(token.data);
        break;
      case Token::Type::kComment: {
        auto node = std::make_unique<Node>(Node::Type::kComment);
        node->data_ = std::move(token.data);
        current()->append(std::move(node));
        break;
      }
      case Token::Type::kDoctype:
        break;
      case Token::Type::kStartTag:
        start_tag(token);
        break;
      case Token::Type::kEndTag:
        end_tag(token.name);
        break;
    }
  }

 private:
  Node* current() const { return stack_.back(); }

  bool on_stack(const Node* node) const {
    return node && std::find(stack_.begin(), stack_.end(), node) != stack_.end();
  }

  void pop_through(const Node* node) {
    while (stack_.size() > 1) {
      Node* top = stack_.back();
      stack_.pop_back();
      if (top == node)
        return;
    }
  }

  void ensure_html() {
    if (html_)
      return;
    auto node = std::make_unique<Node>(Node::Type::kElement);
    node->name_ = "html";
    html_ = doc_.root_->append(std::move(node));
    stack_.push_back(html_);
  }

  static void merge_attributes(Node* target, const std::vector<Attribute>& attrs) {
    for (const auto& a : attrs)
      if (!target->attribute(a.name))
        target->attributes_.push_back(a);
  }

  void text(std::string& data) {
    if (data.empty())
      return;
    Node* node = current();
    bool whitespace_only = std::all_of(data.begin(), data.end(), is_space);
    bool outside_content = node->type() == Node::Type::kDocument || node == html_ || node == head_ ||
                           node->is_element("frameset");
    if (outside_content) {
      if (whitespace_only || node->is_element("frameset"))
        return;
      ensure_html();
      if (on_stack(head_))
        pop_through(head_);
      node = current();
    }
    if (!node->children_.empty() && node->children_.back()->type() == Node::Type::kText) {
      node->children_.back()->data_ += data;
      return;
    }
    auto text_node = std::make_unique<Node>(Node::Type::kText);
    text_node->data_ = std::move(data);
    node->append(std::move(text_node));
  }

  // Pops through the nearest open element named `name`, giving up at any of
  // `stop_at` or a scope boundary.
  template <std::size_t N>
  void close_if_open(std::string_view name, const std::array<std::string_view, N>& stop_at) {
    for (std::size_t i = stack_.size() - 1; i >= 1; --i) {
      const Node* node = stack_[i];
      if (node->name() == name) {
        pop_through(node);
        return;
      }
      if (one_of(node->name(), stop_at) || one_of(node->name(), kScopeBoundaries))
        return;
    }
  }

  void close_any_of(std::initializer_list<std::string_view> names, std::initializer_list<std::string_view> stop_at) {
    for (std::size_t i = stack_.size() - 1; i >= 1; --i) {
      const Node* node = stack_[i];
      if (std::find(names.begin(), names.end(), node->name()) != names.end()) {
        pop_through(node);
        return;
      }
      if (std::find(stop_at.begin(), stop_at.end(), node->name()) != stop_at.end() || node == html_)
        return;
    }
  }

  void implied_end_tags(std::string_view name) {
    static constexpr std::array<std::string_view, 0> kNone = {};
    if (one_of(name, kClosesParagraph))
      close_if_open("p", kNone);
    if (name == "li") {
      close_any_of({"li"}, {"ul", "ol", "menu", "table", "td", "th"});
    } else if (name == "dt" || name == "dd") {
      close_any_of({"dt", "dd"}, {"dl", "table", "td", "th"});
    } else if (name == "option") {
      if (current()->is_element("option"))
        pop_through(current());
    } else if (name == "optgroup") {
      if (current()->is_element("option"))
        pop_through(current());
      if (current()->is_element("optgroup"))
        pop_through(current());
    } else if (name == "tr") {
      close_any_of({"tr"}, {"table"});
    } else if (name == "td" || name == "th") {
      close_any_of({"td", "th"}, {"tr", "table"});
    } else if (name == "tbody" || name == "thead" || name == "tfoot") {
      close_any_of({"tbody", "thead", "tfoot"}, {"table"});
    } else if (one_of(name, kHeadings)) {
      if (one_of(current()->name(), kHeadings))
        pop_through(current());
    } else if (name == "a") {
      close_if_open("a", kNone);
    }
  }

  void start_tag(const Token& token) {
    const std::string& name = token.name;
    if (name == "html") {
      if (html_) {
        merge_attributes(html_, token.attributes);
        return;
      }
      ensure_html();
      merge_attributes(html_, token.attributes);
      return;
    }
    ensure_html();

    if (name == "head" && head_) {
      merge_attributes(head_, token.attributes);
      return;
    }
    if (name == "body") {
      if (body_) {
        merge_attributes(body_, token.attributes);
        return;
      }
      if (on_stack(head_))
        pop_through(head_);
    }
    if (on_stack(head_) && name != "head" && !one_of(name, kHeadContent))
      pop_through(head_);

    implied_end_tags(name);

    auto element = std::make_unique<Node>(Node::Type::kElement);
    element->name_ = name;
    element->attributes_ = token.attributes;
    Node* inserted = current()->append(std::move(element));
    if (name == "head")
      head_ = inserted;
    else if (name == "body")
      body_ = inserted;

    if (!is_void_element(name) && !token.self_closing && stack_.size() < kMaxDepth)
      stack_.push_back(inserted);
  }

  void end_tag(const std::string& name) {
    if (name == "html" || name == "body" || name == "br")
      return;
    if (name == "head") {
      if (on_stack(head_))
        pop_through(head_);
      return;
    }
    for (std::size_t i = stack_.size() - 1; i >= 1; --i) {
      const Node* node = stack_[i];
      if (node->name() == name) {
        pop_through(node);
        return;
      }
      if (one_of(node->name(), kScopeBoundaries))
        return;
    }
  }

  Document& doc_;
  std::vector<Node*> stack_;
  Node* html_ = nullptr;
  Node* head_ = nullptr;
  Node* body_ = nullptr;
};

// --- Document --------------------------------------------------------------

Document::Document() : root_(std::make_unique<Node>(Node::Type::kDocument)) {}

Document::Document(const Document& other) : root_(other.root_->clone()) {}

Document& Document::operator=(const Document& other) {
  if (this != &other)
    root_ = other.root_->clone();
  return *this;
}

Document Document::parse(std::string_view utf8) {
  Document doc;
  TreeBuilder builder(doc);
  Tokenizer tokenizer(utf8);
  while (auto token = tokenizer.next())
    builder.process(*token);
  return doc;
}

namespace {

std::size_t remove_in(std::vector<std::unique_ptr<Node>>& children, const std::function<bool(const Node&)>& pred) {
  std::size_t removed = 0;
  for (auto it = children.begin(); it != children.end();) {
    Node& child = **it;
    if (child.type() == Node::Type::kElement && pred(child)) {
      it = children.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

void walk_node(const Node& node, const std::function<void(const Node&)>& visit) {
  visit(node);
  for (const auto& child : node.children())
    walk_node(*child, visit);
}

void escape_into(std::string& out, std::string_view text, bool attribute) {
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
          break;
        }
        [[fallthrough]];
      default: out.push_back(c);
    }
  }
}

void serialize_node(const Node& node, std::string& out) {
  switch (node.type()) {
    case Node::Type::kDocument:
      for (const auto& child : node.children())
        serialize_node(*child, out);
      break;
    case Node::Type::kText:
      escape_into(out, node.data(), false);
      break;
    case Node::Type::kComment:
      out += "<!--" + node.data() + "-->";
      break;
    case Node::Type::kElement:
      out += "<" + node.name();
      for (const auto& a : node.attributes()) {
        out += " " + a.name + "=\"";
        escape_into(out, a.value, true);
        out += "\"";
      }
      out += ">";
      for (const auto& child : node.children())
        serialize_node(*child, out);
      if (!is_void_element(node.name()))
        out += "</" + node.name() + ">";
      break;
  }
}

}  // namespace

std::size_t Document::remove_elements(const std::function<bool(const Node&)>& pred) {
  std::size_t removed = 0;
  std::vector<Node*> pending{root_.get()};
  while (!pending.empty()) {
    Node* node = pending.back();
    pending.pop_back();
    removed += remove_in(node->children_, pred);
    for (auto& child : node->children_)
      if (child->type() == Node::Type::kElement)
        pending.push_back(child.get());
  }
  return removed;
}

void Document::walk(const std::function<void(const Node&)>& visit) const {
  walk_node(*root_, visit);
}

std::string Document::text_content() const {
  std::string out;
  walk([&](const Node& node) {
    if (node.type() == Node::Type::kText)
      out += node.data();
  });
  return out;
}

std::string Document::serialize() const {
  std::string out;
  serialize_node(*root_, out);
  return out;
}

}  // namespace memharvest::html
