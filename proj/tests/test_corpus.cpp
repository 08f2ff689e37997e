#include "doctest.h"

#include "support.hpp"
#include "xmsmo/corpus.hpp"
#include "xmsmo/error.hpp"

#include <fstream>

using namespace xmsmo;
namespace fs = std::filesystem;

TEST_CASE("tokenize lowercases and strips punctuation") {
  CHECK(tokenize("Hello, World!") == TokenList{"hello", "world"});
  CHECK(tokenize("  \t\n") == TokenList{});
  CHECK(tokenize("U.S. stocks - up 3%") == TokenList{"us", "stocks", "up", "3"});
}

TEST_CASE("split_sentences partitions the token sequence") {
  const SplitText text = split_sentences("The cat sat. It purred! Did it? yes");
  CHECK(text.tokens == TokenList{"the", "cat", "sat", "it", "purred", "did", "it", "yes"});
  REQUIRE(text.sentences.size() == 4);
  CHECK(text.sentences[0] == Span{0, 2});
  CHECK(text.sentences[1] == Span{3, 4});
  CHECK(text.sentences[2] == Span{5, 6});
  CHECK(text.sentences[3] == Span{7, 7});
  CHECK_NOTHROW(validate_partition(text.sentences, 8, "sentences"));

  SUBCASE("a closing quote still ends the sentence") {
    const SplitText quoted = split_sentences("He said \"go.\" Then left.");
    CHECK(quoted.sentences.size() == 2);
  }
  SUBCASE("no terminator gives one sentence") {
    CHECK(split_sentences("no full stop here").sentences.size() == 1);
  }
}

TEST_CASE("validate_partition rejects gaps and overlaps") {
  CHECK_THROWS_AS(validate_partition({{0, 1}, {3, 4}}, 5, "x"), Error);
  CHECK_THROWS_AS(validate_partition({{0, 2}, {2, 4}}, 5, "x"), Error);
  CHECK_THROWS_AS(validate_partition({{0, 3}}, 5, "x"), Error);
  CHECK_THROWS_AS(validate_partition({}, 1, "x"), Error);
}

TEST_CASE("segment_scenes splits on cosine jumps") {
  Eigen::MatrixXd e(5, 2);
  e << 1, 0, 1, 0.01, 0, 1, 0, 1, 1, 0;
  const auto scenes = segment_scenes(e, 0.35);
  REQUIRE(scenes.size() == 3);
  CHECK(scenes[0] == Span{0, 1});
  CHECK(scenes[1] == Span{2, 3});
  CHECK(scenes[2] == Span{4, 4});
  CHECK(segment_scenes(e, 2.0).size() == 1);
  CHECK_THROWS_AS(segment_scenes(e, -0.1), Error);
}

TEST_CASE("manifest entries resolve relative to the manifest") {
  testing::TempDir dir("manifest");
  const fs::path manifest = testing::write_synthetic_corpus(dir.path(), 2, 3, 4, 12);
  const Manifest m = read_manifest(manifest);
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].id == "pair0");
  CHECK(fs::exists(m.entries[1].frames_dir));
  CHECK(m.entries[0].ref_title.has_value());

  SUBCASE("duplicate ids are rejected") {
    std::ofstream(manifest, std::ios::app) << R"({"id":"pair0","frames_dir":"a","document_path":"b"})" << '\n';
    CHECK_THROWS_AS(read_manifest(manifest), Error);
  }
  SUBCASE("a missing manifest names its path") {
    try {
      read_manifest(dir.path() / "absent.jsonl");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
      CHECK(std::string(e.what()).find("absent.jsonl") != std::string::npos);
    }
  }
}

TEST_CASE("load_pair samples, caps and resizes frames") {
  testing::TempDir dir("load");
  const Manifest m = read_manifest(testing::write_synthetic_corpus(dir.path(), 1, 5, 7, 20));
  LoadOptions options;
  options.frame_stride = 2;
  options.frame_cap = 3;
  options.width = 16;
  options.height = 9;
  options.embeddings.dim = 16;
  const VideoDocPair pair = load_pair(m.entries[0], options);
  CHECK(pair.source_frame_count == 7);
  REQUIRE(pair.frame_count() == 3);
  CHECK(pair.frame_paths[1].filename() == "0002.ppm");
  CHECK(pair.frames[0].width == 16);
  CHECK(pair.frames[0].height == 9);
  CHECK(pair.word_count() == 20);
  CHECK_NOTHROW(validate_partition(pair.scenes, pair.frame_count(), "scenes"));
  CHECK_NOTHROW(validate_partition(pair.sentences, pair.word_count(), "sentences"));
  REQUIRE(pair.ref_cover.has_value());
  CHECK(pair.ref_title->size() == 5);

  SUBCASE("stride 360 over few files keeps the first frame only") {
    options.frame_stride = 360;
    CHECK(load_pair(m.entries[0], options).frame_count() == 1);
  }
}

TEST_CASE("toy and file embeddings agree") {
  testing::TempDir dir("emb");
  const Manifest m = read_manifest(testing::write_synthetic_corpus(dir.path(), 1, 9, 4, 15));
  LoadOptions options;
  options.frame_stride = 1;
  options.width = 0;
  options.embeddings.dim = 24;
  options.embeddings.seed = 4;
  const VideoDocPair pair = load_pair(m.entries[0], options);
  const PairEmbeddings toy = load_embeddings(pair, options.embeddings);
  CHECK(toy.frames.rows() == pair.frame_count());
  CHECK(toy.words.rows() == pair.word_count());
  CHECK(toy.frames.rowwise().norm().minCoeff() == doctest::Approx(1.0));

  write_toy_embeddings(pair, options.embeddings, dir.path() / "emb");
  EmbeddingSource files = options.embeddings;
  files.directory = dir.path() / "emb";
  const PairEmbeddings loaded = load_embeddings(pair, files);
  CHECK((loaded.frames - toy.frames).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((loaded.words - toy.words).cwiseAbs().maxCoeff() < 1e-6);
  const auto a = loaded.tokens.lookup(pair.words[0]);
  REQUIRE(a.has_value());
  CHECK((*a - *toy.tokens.lookup(pair.words[0])).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_FALSE(loaded.tokens.lookup("not-in-this-document").has_value());

  SUBCASE("row count mismatch is a format error") {
    VideoDocPair shorter = pair;
    shorter.words.pop_back();
    CHECK_THROWS_AS(load_embeddings(shorter, files), Error);
  }
}
