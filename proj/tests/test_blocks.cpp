#include <gtest/gtest.h>

#include "semdepth/blocks.hpp"
#include "semdepth/palette.hpp"
#include "semdepth/toy.hpp"

using namespace semdepth;

TEST(ResidualUnit, SkipKeepsShape) {
    torch::manual_seed(0);
    ResidualUnit unit(ResidualKind::Skip, 64, 64, 1);
    unit->eval();
    const auto y = unit->forward(torch::rand({1, 64, 32, 32}));
    EXPECT_EQ(y.sizes(), (std::vector<std::int64_t>{1, 64, 32, 32}));
    EXPECT_EQ(unit->output_spec({32, 32, 64}), (TensorSpec{32, 32, 64}));
}

TEST(ResidualUnit, StridedProjection) {
    torch::manual_seed(0);
    ResidualUnit unit(ResidualKind::Projection, 64, 256, 2);
    unit->eval();
    const auto y = unit->forward(torch::rand({1, 64, 32, 32}));
    EXPECT_EQ(y.sizes(), (std::vector<std::int64_t>{1, 256, 16, 16}));
    EXPECT_EQ(unit->output_spec({32, 32, 64}), (TensorSpec{16, 16, 256}));
}

TEST(ResidualUnit, ZeroMainBranchPassesActivatedInput) {
    torch::manual_seed(0);
    ResidualUnit unit(ResidualKind::Skip, 16, 16, 1);
    unit->eval();
    {
        torch::NoGradGuard guard;
        unit->bn3->weight.zero_();
        unit->bn3->bias.zero_();
    }
    const auto x = torch::randn({2, 16, 8, 8});
    EXPECT_TRUE(torch::allclose(unit->forward(x), torch::relu(x)));
}

TEST(ResidualUnit, SkipNeedsMatchingWidth) {
    EXPECT_THROW(ResidualUnit(ResidualKind::Skip, 16, 32, 1), std::invalid_argument);
}

TEST(Interleave, SingleCellLayout) {
    const auto t = [](float v) { return torch::full({1, 1, 1, 1}, v); };
    const auto out = interleave(t(1), t(2), t(3), t(4));
    EXPECT_TRUE(torch::equal(out, torch::tensor({1.0F, 2.0F, 3.0F, 4.0F}).view({1, 1, 2, 2})));
}

TEST(Interleave, EvenSubsampleRecoversFirstMap) {
    const auto a = torch::randn({2, 3, 4, 5});
    const auto out = interleave(a, torch::randn_like(a), torch::randn_like(a), torch::randn_like(a));
    EXPECT_EQ(out.sizes(), (std::vector<std::int64_t>{2, 3, 8, 10}));
    using torch::indexing::Slice;
    using torch::indexing::None;
    EXPECT_TRUE(torch::equal(out.index({Slice(), Slice(), Slice(0, None, 2), Slice(0, None, 2)}), a));
}

TEST(UpSamplingBlock, DoublesResolution) {
    torch::manual_seed(0);
    UpSamplingBlock block(32, 16);
    block->eval();
    const auto y = block->forward(torch::rand({1, 32, 8, 8}));
    EXPECT_EQ(y.sizes(), (std::vector<std::int64_t>{1, 16, 16, 16}));
    EXPECT_GE(y.min().item<float>(), 0.0F);
    EXPECT_EQ(block->output_spec({8, 8, 32}), (TensorSpec{16, 16, 16}));
}

TEST(Sobel, ConstantImageHasNoEdges) {
    const auto e = sobel_edges(torch::full({1, 3, 6, 6}, 0.7F));
    EXPECT_EQ(e.sizes(), (std::vector<std::int64_t>{1, 1, 6, 6}));
    EXPECT_EQ(e.abs().max().item<float>(), 0.0F);
}

TEST(Sobel, VerticalStepLightsTwoColumns) {
    auto img = torch::zeros({1, 3, 6, 6});
    using torch::indexing::Slice;
    using torch::indexing::None;
    img.index_put_({Slice(), Slice(), Slice(), Slice(3, None)}, 1.0F);
    const auto e = sobel_edges(img);
    for (int c = 0; c < 6; ++c) {
        const float col = e.index({0, 0, Slice(), c}).min().item<float>();
        if (c == 2 || c == 3) {
            // |Gx| = 4 per channel, three channels.
            EXPECT_FLOAT_EQ(col, 12.0F) << c;
        } else {
            EXPECT_EQ(e.index({0, 0, Slice(), c}).max().item<float>(), 0.0F) << c;
        }
    }
}

TEST(Sobel, NonNegativeAndGridAgrees) {
    const auto s = generate_toy_dataset(1, 64, 32, common_registry(), 5).front();
    const auto t = sobel_edges(to_tensor(s.image));
    EXPECT_GE(t.min().item<float>(), 0.0F);
    const auto g = sobel_edges(s.image);
    const auto back = to_hwc(t[0]);
    ASSERT_EQ(back.size(), g.data().size());
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_FLOAT_EQ(back[i], g.data()[i]);
}

TEST(SemanticMask, OnesZerosAndToyBox) {
    const auto img = torch::rand({1, 3, 4, 4});
    auto sem = torch::zeros({1, 2, 4, 4});
    sem.index_put_({0, 1}, 1.0F);
    EXPECT_TRUE(torch::equal(semantic_mask(img, sem, 1), img));
    EXPECT_EQ(semantic_mask(img, sem, 0).abs().max().item<float>(), 0.0F);

    ToyOptions opts;
    const auto s = generate_toy_dataset(1, 64, 32, common_registry(), 9).front();
    const int car = static_cast<int>(*common_registry().index_of("Car"));
    const auto masked = semantic_mask(s.image, *s.semantic, car);
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 64; ++c) {
            const bool is_car = s.semantic->argmax(r, c) == car;
            for (int ch = 0; ch < 3; ++ch) {
                EXPECT_EQ(masked.at(r, c, ch), is_car ? s.image.at(r, c, ch) : 0.0F);
            }
        }
    }
}

TEST(SemanticEdges, PartitionOfEdges) {
    const auto s = generate_toy_dataset(1, 64, 32, common_registry(), 2).front();
    const auto edges = sobel_edges(to_tensor(s.image));
    const auto sem = to_tensor(*s.semantic);
    const auto split = semantic_edges(edges, sem);
    EXPECT_EQ(split.size(1), sem.size(1));
    EXPECT_TRUE(torch::allclose(split.sum(1, true), edges));

    const auto ones = torch::ones({1, 1, 32, 64});
    EXPECT_TRUE(torch::equal(semantic_edges(edges, ones), edges));
}
