from __future__ import annotations

import random
from pathlib import Path

import pytest
from filelock import FileLock

from crucible.recipes import parse_recipe
from crucible.store import (
    AmbiguousPrefix,
    BaseImageUnresolvable,
    CorruptManifest,
    InvalidTagName,
    Store,
    StoreUnwritable,
    UnknownImage,
    build_image,
    publish_image,
    pull_image,
    store_usage,
    synthetic_size,
    tag_image,
)

from helpers import oracle_layer_chain


def _recipe(lines: list[str]):
    return parse_recipe("\n".join(lines))


def test_build_matches_hash_oracle(store: Store) -> None:
    recipe = _recipe(["FROM ubuntu:16.04", "USER root", "RUN apt-get -y update"])
    image = build_image(store, recipe)
    expected = oracle_layer_chain(
        [("FROM", "ubuntu:16.04"), ("USER", "root"), ("RUN", "apt-get -y update")]
    )
    assert list(image.layers) == [lid for lid, _ in expected]
    for lid, size in expected:
        assert store.layers[lid].size_bytes == size


def test_from_layer_is_size_zero(store: Store) -> None:
    image = build_image(store, _recipe(["FROM ubuntu:16.04"]))
    assert store.layers[image.layers[0]].size_bytes == 0


def test_synthetic_size_counts_utf8_bytes() -> None:
    recipe = _recipe(["FROM a", "RUN échо"])
    assert synthetic_size(recipe.directives[1]) == 1024 * len("échо".encode())


def test_image_id_independent_of_store_content(tmp_path: Path) -> None:
    recipe = _recipe(["FROM alpine", "RUN echo hi"])
    empty = Store.open(tmp_path / "a")
    busy = Store.open(tmp_path / "b")
    build_image(busy, _recipe(["FROM other", "RUN unrelated", "ENV X=1"]))
    assert build_image(empty, recipe).id == build_image(busy, recipe).id


def test_shared_prefix_shares_layer_objects(store: Store) -> None:
    a = build_image(store, _recipe(["FROM alpine", "RUN step1", "RUN a-only"]))
    b = build_image(store, _recipe(["FROM alpine", "RUN step1", "RUN b-only"]))
    assert a.layers[:2] == b.layers[:2]
    assert a.layers[2] != b.layers[2]
    assert len(store.layers) == 4


def test_rebuild_is_a_noop(store: Store) -> None:
    recipe = _recipe(["FROM alpine", "RUN x"])
    first = build_image(store, recipe)
    count = len(store.layers)
    second = build_image(store, recipe)
    assert second.id == first.id
    assert len(store.layers) == count


def test_usage_against_brute_force_oracle(store: Store) -> None:
    rng = random.Random(7)
    pool = [f"cmd-{i}" for i in range(6)]
    recipes = []
    for _ in range(12):
        steps = rng.sample(pool, rng.randint(1, 4))
        recipes.append([("FROM", "base")] + [("RUN", s) for s in steps])
    for rec in recipes:
        build_image(store, _recipe([f"{k} {a}" for k, a in rec]))

    expected_layers: dict[str, int] = {}
    expected_per_image: dict[str, int] = {}
    for rec in recipes:
        chain = oracle_layer_chain(rec)
        for lid, size in chain:
            expected_layers[lid] = size
        expected_per_image[chain[-1][0]] = sum(size for _, size in chain)

    usage = store_usage(store)
    assert usage.distinct_layers == len(expected_layers)
    assert usage.total_bytes == sum(expected_layers.values())
    assert usage.image_bytes == expected_per_image
    assert usage.shared_bytes == sum(expected_per_image.values()) - usage.total_bytes


def test_tagging_and_resolution(store: Store) -> None:
    image = build_image(store, _recipe(["FROM alpine", "RUN x"]))
    tag_image(store, image.id, "scipy-image")
    assert store.resolve("scipy-image") == image.id
    assert "scipy-image" in store.images[image.id].tags
    # a full id resolves, as does a 12-char display prefix
    assert store.resolve(image.id) == image.id
    assert store.resolve(image.id[:12]) == image.id


def test_retag_moves_the_name(store: Store) -> None:
    a = build_image(store, _recipe(["FROM alpine", "RUN a"]))
    b = build_image(store, _recipe(["FROM alpine", "RUN b"]))
    tag_image(store, a.id, "latest")
    tag_image(store, b.id, "latest")
    assert store.resolve("latest") == b.id
    assert "latest" not in store.images[a.id].tags


def test_tag_same_image_twice_is_noop(store: Store) -> None:
    image = build_image(store, _recipe(["FROM alpine", "RUN a"]))
    tag_image(store, image.id, "x")
    tag_image(store, image.id, "x")
    assert store.resolve("x") == image.id


def test_invalid_tag_names_rejected(store: Store) -> None:
    image = build_image(store, _recipe(["FROM alpine"]))
    for bad in ("Upper", "has space", "semi;colon", ""):
        with pytest.raises(InvalidTagName):
            tag_image(store, image.id, bad)


def test_short_unique_prefix_is_rejected(store: Store) -> None:
    image = build_image(store, _recipe(["FROM alpine", "RUN only"]))
    with pytest.raises(AmbiguousPrefix):
        store.resolve(image.id[:4])
    assert store.resolve(image.id[:6]) == image.id


def test_shared_prefix_is_ambiguous(store: Store) -> None:
    # build images until two ids share a first hex character
    by_first: dict[str, str] = {}
    clash = None
    for i in range(40):
        image = build_image(store, _recipe(["FROM alpine", f"RUN step-{i}"]))
        if image.id[0] in by_first:
            clash = image.id[0]
            break
        by_first[image.id[0]] = image.id
    assert clash is not None
    with pytest.raises(AmbiguousPrefix):
        store.resolve(clash)


def test_unknown_reference(store: Store) -> None:
    with pytest.raises(UnknownImage):
        store.resolve("nope")


def test_base_image_checked_against_registry(tmp_path: Path, store: Store) -> None:
    registry = tmp_path / "registry"
    base = build_image(store, _recipe(["FROM scratch"]))
    tag_image(store, base.id, "ubuntu:16.04")
    publish_image(store, "ubuntu:16.04", registry)

    fresh = Store.open(tmp_path / "fresh")
    recipe = _recipe(["FROM ubuntu:16.04", "RUN x"])
    # known to the registry: builds fine
    build_image(fresh, recipe, registry)
    # unknown to the registry: hard error
    with pytest.raises(BaseImageUnresolvable):
        build_image(fresh, _recipe(["FROM nowhere:1", "RUN x"]), registry)


def test_base_image_miss_without_registry_warns(store: Store, caplog) -> None:
    with caplog.at_level("WARNING", logger="crucible.store"):
        build_image(store, _recipe(["FROM ubuntu:16.04", "RUN x"]))
    assert any("synthetic base" in r.message for r in caplog.records)


def test_reload_preserves_everything(tmp_path: Path) -> None:
    root = tmp_path / "store"
    store = Store.open(root)
    image = build_image(store, _recipe(["FROM alpine", "RUN x", "ENV A=1"]))
    tag_image(store, image.id, "demo")

    reloaded = Store.open(root)
    assert reloaded.layers == store.layers
    assert {i: img.layers for i, img in reloaded.images.items()} == {
        i: img.layers for i, img in store.images.items()
    }
    assert reloaded.tags == store.tags
    assert reloaded.resolve("demo") == image.id


def test_identical_operations_produce_identical_files(tmp_path: Path) -> None:
    def populate(root: Path) -> None:
        store = Store.open(root)
        image = build_image(store, _recipe(["FROM alpine", "RUN x"]))
        tag_image(store, image.id, "demo")

    populate(tmp_path / "one")
    populate(tmp_path / "two")
    files_one = sorted(p.relative_to(tmp_path / "one") for p in (tmp_path / "one").rglob("*") if p.is_file() and p.name != "lock")
    files_two = sorted(p.relative_to(tmp_path / "two") for p in (tmp_path / "two").rglob("*") if p.is_file() and p.name != "lock")
    assert files_one == files_two
    for rel in files_one:
        assert (tmp_path / "one" / rel).read_bytes() == (tmp_path / "two" / rel).read_bytes()


def test_publish_then_pull_round_trip(tmp_path: Path) -> None:
    source = Store.open(tmp_path / "src")
    image = build_image(source, _recipe(["FROM alpine", "RUN a", "RUN b"]))
    tag_image(source, image.id, "demo:1.0")
    written = publish_image(source, "demo:1.0", tmp_path / "reg")
    assert written == 3

    dest = Store.open(tmp_path / "dst")
    pulled = pull_image(dest, tmp_path / "reg", "demo:1.0")
    assert pulled.id == image.id
    assert dest.resolve("demo:1.0") == image.id
    assert dest.layers == source.layers


def test_second_pull_copies_nothing(tmp_path: Path) -> None:
    source = Store.open(tmp_path / "src")
    image = build_image(source, _recipe(["FROM alpine", "RUN a"]))
    tag_image(source, image.id, "demo:1.0")
    publish_image(source, "demo:1.0", tmp_path / "reg")

    dest = Store.open(tmp_path / "dst")
    pull_image(dest, tmp_path / "reg", "demo:1.0")
    count = len(dest.layers)
    pull_image(dest, tmp_path / "reg", "demo:1.0")
    assert len(dest.layers) == count


def test_pull_shares_layers_with_local_builds(tmp_path: Path) -> None:
    source = Store.open(tmp_path / "src")
    image = build_image(source, _recipe(["FROM alpine", "RUN shared", "RUN extra"]))
    tag_image(source, image.id, "demo:1.0")
    publish_image(source, "demo:1.0", tmp_path / "reg")

    dest = Store.open(tmp_path / "dst")
    build_image(dest, _recipe(["FROM alpine", "RUN shared"]))
    before = len(dest.layers)
    pull_image(dest, tmp_path / "reg", "demo:1.0")
    assert len(dest.layers) == before + 1


def test_tampered_registry_layer_is_rejected(tmp_path: Path) -> None:
    source = Store.open(tmp_path / "src")
    image = build_image(source, _recipe(["FROM alpine", "RUN a"]))
    tag_image(source, image.id, "demo:1.0")
    publish_image(source, "demo:1.0", tmp_path / "reg")

    victim = image.layers[1]
    layer_file = tmp_path / "reg" / "layers" / f"{victim}.layer"
    layer_file.write_text(layer_file.read_text().replace("RUN", "ENV"))

    dest = Store.open(tmp_path / "dst")
    with pytest.raises(CorruptManifest):
        pull_image(dest, tmp_path / "reg", "demo:1.0")
    assert "demo:1.0" not in dest.tags


def test_pull_unknown_reference(tmp_path: Path) -> None:
    (tmp_path / "reg").mkdir()
    dest = Store.open(tmp_path / "dst")
    with pytest.raises(UnknownImage):
        pull_image(dest, tmp_path / "reg", "ghost:1")


def test_locked_store_rejects_writers(tmp_path: Path) -> None:
    store = Store.open(tmp_path / "store")
    store.lock_timeout = 0.1
    held = FileLock(str(tmp_path / "store" / "lock"))
    with held.acquire():
        with pytest.raises(StoreUnwritable):
            build_image(store, _recipe(["FROM alpine"]))
