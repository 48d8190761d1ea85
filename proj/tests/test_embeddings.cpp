#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include "clann/embeddings.hpp"
#include "clann/error.hpp"

using namespace clann;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("clann_emb_" + name);
  std::ofstream(path) << body;
  return path;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(LoadEmbeddingTable, WithAndWithoutHeader) {
  const auto with = write_temp("h.txt", "2 3\ncat 1 2 3\ndog 0 0 1\n");
  const auto without = write_temp("n.txt", "cat 1 2 3\ndog 0 0 1\n");
  const EmbeddingTable a = load_embedding_table(with, "a");
  const EmbeddingTable b = load_embedding_table(without, "b");
  EXPECT_EQ(a.size(), 2u);
  EXPECT_EQ(a.dimension(), 3u);
  EXPECT_EQ(*a.find("cat"), (Vector{1, 2, 3}));
  EXPECT_EQ(*a.find("dog"), *b.find("dog"));
  EXPECT_EQ(a.find("bird"), nullptr);
}

TEST(LoadEmbeddingTable, DuplicateTokenKeepsLastVector) {
  const auto p = write_temp("dup.txt", "x 1 1\nx 2 2\n");
  const EmbeddingTable t = load_embedding_table(p, "t");
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(*t.find("x"), (Vector{2, 2}));
}

TEST(LoadEmbeddingTable, ErrorsCarryLineNumbers) {
  const auto ragged = write_temp("ragged.txt", "a 1 2\nb 1 2\nc 1\n");
  EXPECT_NE(error_of([&] { load_embedding_table(ragged, "t"); }).find(":3"), std::string::npos);
  const auto bad = write_temp("bad.txt", "a 1 2\nb 1 zz\n");
  EXPECT_NE(error_of([&] { load_embedding_table(bad, "t"); }).find(":2"), std::string::npos);
  const auto header = write_temp("hdr.txt", "3 2\na 1 2\nb 1 2\n");
  EXPECT_NE(error_of([&] { load_embedding_table(header, "t"); }), "");
  const auto ok = write_temp("ok.txt", "a 1 2\n");
  EXPECT_NE(error_of([&] { load_embedding_table(ok, "t", 3); }), "");
  EXPECT_NE(error_of([&] { load_embedding_table("/nonexistent/emb.txt", "t"); }), "");
}

TEST(EmbedTokens, MeanOfKnownTokens) {
  const EmbeddingTable t("t", 2, {{"a", Vector{1, 0}}, {"b", Vector{0, 1}}});
  const auto e = embed_tokens({"a", "b"}, t);
  EXPECT_EQ(e.vector, (Vector{0.5, 0.5}));
  EXPECT_EQ(e.oov_tokens, 0u);
  EXPECT_FALSE(e.degenerate);
  EXPECT_EQ(embed_tokens({"a", "a"}, t).vector, (Vector{1, 0}));
}

TEST(EmbedTokens, OutOfVocabulary) {
  const EmbeddingTable t("t", 2, {{"a", Vector{1, 0}}, {"b", Vector{0, 1}}});
  const auto partial = embed_tokens({"a", "zzz"}, t);
  EXPECT_EQ(partial.vector, (Vector{1, 0}));
  EXPECT_EQ(partial.oov_tokens, 1u);
  const auto none = embed_tokens({"zzz"}, t);
  EXPECT_TRUE(none.degenerate);
  EXPECT_EQ(none.vector, Vector(2));
  EXPECT_THROW(embed_tokens({}, t), ValidationError);
}

TEST(EmbedTokens, OrderInvariantAndIgnoresOov) {
  const EmbeddingTable t("t", 2, {{"a", Vector{1, 3}}, {"b", Vector{-2, 1}}, {"c", Vector{0, 5}}});
  EXPECT_EQ(embed_tokens({"a", "b", "c"}, t).vector, embed_tokens({"c", "a", "b"}, t).vector);
  EXPECT_EQ(embed_tokens({"a", "b"}, t).vector, embed_tokens({"a", "q", "b", "r"}, t).vector);
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("Hello, World!"), (std::vector<std::string>{"hello", "world"}));
  EXPECT_EQ(tokenize("  a\tb\n"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(tokenize("don't"), (std::vector<std::string>{"don't"}));
  EXPECT_TRUE(tokenize("!!! ...").empty());
}

TEST(Tokenize, NonAsciiPassesThrough) {
  const auto t = tokenize("\xd9\x83\xd9\x8a\xd9\x81 \xd8\xa7\xd9\x84\xd8\xb7\xd9\x82\xd8\xb3\xd8\x9f");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], "\xd9\x83\xd9\x8a\xd9\x81");
}

TEST(Tokenize, IsIdempotentOnJoinedTokens) {
  for (const char* text : {"What is IT?", "a-b c_d!!", "x.y.z  end."}) {
    const auto once = tokenize(text);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    EXPECT_EQ(tokenize(joined), once) << text;
  }
}

TEST(Fingerprint, DetectsChangedVector) {
  const EmbeddingTable a("t", 2, {{"a", Vector{1, 0}}, {"b", Vector{0, 1}}});
  const EmbeddingTable b("t", 2, {{"b", Vector{0, 1}}, {"a", Vector{1, 0}}});
  const EmbeddingTable c("t", 2, {{"a", Vector{1, 0}}, {"b", Vector{0, 1.5}}});
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
}

TEST(ParseTableSpec, Examples) {
  const auto [name, path] = parse_table_spec("w2v=/tmp/x.txt");
  EXPECT_EQ(name, "w2v");
  EXPECT_EQ(path, std::filesystem::path("/tmp/x.txt"));
  EXPECT_THROW(parse_table_spec("nopath"), ValidationError);
  EXPECT_THROW(parse_table_spec("=x"), ValidationError);
}
