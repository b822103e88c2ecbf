"""Content-addressed image store.

Images are chains of layers. A layer's identity is the sha256 of its
parent id, its directive text and its synthetic size, so two recipes
sharing a directive prefix share those layer objects byte for byte.
Layer payloads are never materialized; the store tracks bookkeeping
sizes (1024 bytes per UTF-8 byte of the directive argument, zero for
FROM) purely so deduplication can be measured.

On-disk layout under the store root:

    layers/<id>.layer   key<TAB>value lines: id, parent, kind, argument, size
    images/<id>.image   layer ids, one per line, base first
    tags                name<TAB>image-id lines, sorted
    lock                writer lock file

A registry is a directory with the same layers/ layout plus
manifest/<name>/<tag> files listing layer ids, base first.
"""

from __future__ import annotations

import hashlib
import logging
import re
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from filelock import FileLock, Timeout

from .errors import CrucibleError
from .recipes import Directive, DirectiveKind, Recipe

log = logging.getLogger(__name__)

DISPLAY_ID_LEN = 12
# a unique prefix shorter than this is still rejected as ambiguous
MIN_PREFIX_LEN = 6

TAG_NAME_RE = r"^[a-z0-9._/:-]+$"


class StoreError(CrucibleError):
    pass


class StoreUnwritable(StoreError):
    pass


class UnknownImage(StoreError):
    pass


class AmbiguousPrefix(StoreError):
    pass


class InvalidTagName(StoreError):
    pass


class BaseImageUnresolvable(StoreError):
    pass


class CorruptManifest(StoreError):
    pass


def synthetic_size(directive: Directive) -> int:
    if directive.kind is DirectiveKind.FROM:
        return 0
    return 1024 * len(directive.argument.encode("utf-8"))


def layer_id(parent_id: str | None, directive: Directive, size_bytes: int) -> str:
    material = f"{parent_id or ''}\n{directive.canonical()}\n{size_bytes}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Layer:
    id: str
    parent_id: str | None
    directive: Directive
    size_bytes: int

    @property
    def display_id(self) -> str:
        return self.id[:DISPLAY_ID_LEN]


@dataclass
class Image:
    id: str
    layers: tuple[str, ...]
    tags: set[str] = field(default_factory=set)

    @property
    def display_id(self) -> str:
        return self.id[:DISPLAY_ID_LEN]


@dataclass(frozen=True)
class StoreUsage:
    distinct_layers: int
    total_bytes: int
    image_bytes: dict[str, int]
    shared_bytes: int


def _is_valid_tag(name: str) -> bool:
    return bool(re.match(TAG_NAME_RE, name))


def _layer_to_text(layer: Layer) -> str:
    parent = layer.parent_id or ""
    return (
        f"id\t{layer.id}\n"
        f"parent\t{parent}\n"
        f"kind\t{layer.directive.kind.value}\n"
        f"argument\t{layer.directive.argument}\n"
        f"size\t{layer.size_bytes}\n"
    )


def _layer_from_text(text: str, source: str) -> Layer:
    fields: dict[str, str] = {}
    for line in text.splitlines():
        if not line:
            continue
        key, _, value = line.partition("\t")
        fields[key] = value
    try:
        kind = DirectiveKind(fields["kind"])
        layer = Layer(
            id=fields["id"],
            parent_id=fields["parent"] or None,
            directive=Directive(kind, fields["argument"]),
            size_bytes=int(fields["size"]),
        )
    except (KeyError, ValueError) as exc:
        raise CorruptManifest(f"malformed layer file {source}: {exc}") from None
    return layer


class Store:
    """Local image store rooted at a directory.

    Mutations take the store lock (single writer); reads never lock.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self.layers: dict[str, Layer] = {}
        self.images: dict[str, Image] = {}
        self.tags: dict[str, str] = {}
        self.lock_timeout = 10.0

    @classmethod
    def open(cls, root: Path | str) -> "Store":
        store = cls(Path(root))
        try:
            store.root.mkdir(parents=True, exist_ok=True)
            (store.root / "layers").mkdir(exist_ok=True)
            (store.root / "images").mkdir(exist_ok=True)
        except OSError as exc:
            raise StoreUnwritable(f"cannot create store at {store.root}: {exc}") from None
        store._load()
        return store

    def _load(self) -> None:
        for path in sorted((self.root / "layers").glob("*.layer")):
            layer = _layer_from_text(path.read_text(), str(path))
            if layer.id != path.stem:
                raise CorruptManifest(f"layer file {path} declares id {layer.id}")
            self.layers[layer.id] = layer
        for path in sorted((self.root / "images").glob("*.image")):
            chain = tuple(path.read_text().split())
            self.images[path.stem] = Image(id=path.stem, layers=chain)
        tags_path = self.root / "tags"
        if tags_path.exists():
            for line in tags_path.read_text().splitlines():
                if not line:
                    continue
                name, _, image_id = line.partition("\t")
                self.tags[name] = image_id
                if image_id in self.images:
                    self.images[image_id].tags.add(name)

    @contextmanager
    def locked(self):
        lock = FileLock(str(self.root / "lock"), timeout=self.lock_timeout)
        try:
            with lock:
                yield
        except Timeout:
            raise StoreUnwritable(
                f"another process holds the store lock at {self.root}"
            ) from None

    def _write(self, path: Path, text: str) -> None:
        try:
            path.write_text(text)
        except OSError as exc:
            raise StoreUnwritable(f"cannot write {path}: {exc}") from None

    def add_layer(self, layer: Layer) -> None:
        if layer.id in self.layers:
            return
        self.layers[layer.id] = layer
        self._write(self.root / "layers" / f"{layer.id}.layer", _layer_to_text(layer))

    def add_image(self, image: Image) -> None:
        if image.id in self.images:
            return
        self.images[image.id] = image
        self._write(
            self.root / "images" / f"{image.id}.image",
            "".join(lid + "\n" for lid in image.layers),
        )

    def _save_tags(self) -> None:
        lines = "".join(f"{name}\t{iid}\n" for name, iid in sorted(self.tags.items()))
        self._write(self.root / "tags", lines)

    def set_tag(self, name: str, image_id: str) -> None:
        old = self.tags.get(name)
        if old == image_id:
            return
        if old is not None and old in self.images:
            self.images[old].tags.discard(name)
        self.tags[name] = image_id
        self.images[image_id].tags.add(name)
        self._save_tags()

    def resolve(self, reference: str) -> str:
        """Resolve a tag name or unique image-id prefix to a full id."""
        if reference in self.tags:
            return self.tags[reference]
        matches = [iid for iid in self.images if iid.startswith(reference)]
        if len(matches) > 1:
            raise AmbiguousPrefix(f"{reference!r} matches {len(matches)} images")
        if len(matches) == 1:
            if len(reference) < MIN_PREFIX_LEN:
                raise AmbiguousPrefix(
                    f"{reference!r} is shorter than {MIN_PREFIX_LEN} characters"
                )
            return matches[0]
        raise UnknownImage(f"no image or tag matches {reference!r}")

    def has_reference(self, reference: str) -> bool:
        try:
            self.resolve(reference)
        except StoreError:
            return False
        return True


def _registry_manifest_path(registry: Path, reference: str) -> Path:
    name, tag = split_reference(reference)
    return registry / "manifest" / name / tag


def split_reference(reference: str) -> tuple[str, str]:
    """Split name[:tag] into (name, tag), defaulting the tag to latest.

    The colon splits only when the trailing part contains no slash, so
    registry ports (host:443/img) survive.
    """
    name, sep, tag = reference.rpartition(":")
    if sep and "/" not in tag:
        return name, tag
    return reference, "latest"


def registry_has(registry: Path | str, reference: str) -> bool:
    return _registry_manifest_path(Path(registry), reference).is_file()


def build_image(store: Store, recipe: Recipe, registry: Path | str | None = None) -> Image:
    """Build an image from a recipe, one layer per directive.

    Layer ids depend only on the recipe text, never on store contents,
    so identical recipes build identical images everywhere. The FROM
    reference is checked against the store, then the registry when one
    is configured; a miss with no registry degrades to a warning and a
    synthetic base layer.
    """
    base_ref = recipe.base_reference
    if not store.has_reference(base_ref):
        if registry is not None:
            if not registry_has(registry, base_ref):
                raise BaseImageUnresolvable(
                    f"base image {base_ref!r} found in neither store nor registry"
                )
        else:
            log.warning(
                "base image %r not in store and no registry configured; "
                "building on a synthetic base layer",
                base_ref,
            )

    with store.locked():
        parent: str | None = None
        chain: list[str] = []
        for directive in recipe.directives:
            size = synthetic_size(directive)
            lid = layer_id(parent, directive, size)
            store.add_layer(Layer(lid, parent, directive, size))
            chain.append(lid)
            parent = lid
        image = store.images.get(chain[-1])
        if image is None:
            image = Image(id=chain[-1], layers=tuple(chain))
            store.add_image(image)
    return image


def tag_image(store: Store, reference: str, name: str) -> Image:
    """Point a tag name at the image named by a tag or id prefix.

    Retagging an existing name moves it; tagging an image with a name
    it already has is a no-op.
    """
    if not _is_valid_tag(name):
        raise InvalidTagName(
            f"{name!r}: tag names are lowercase alphanumerics plus . - _ / :"
        )
    image_id = store.resolve(reference)
    with store.locked():
        store.set_tag(name, image_id)
    return store.images[image_id]


def pull_image(store: Store, registry: Path | str, reference: str) -> Image:
    """Copy an image from a registry directory into the store.

    Layers already present locally are not copied. Every copied layer is
    re-hashed and checked against the manifest chain; any mismatch
    raises CorruptManifest and leaves no partial image entry.
    """
    registry = Path(registry)
    manifest_path = _registry_manifest_path(registry, reference)
    if not manifest_path.is_file():
        raise UnknownImage(f"registry has no manifest for {reference!r}")
    if not _is_valid_tag(reference):
        raise InvalidTagName(f"{reference!r} is not a valid reference")

    chain = manifest_path.read_text().split()
    if not chain:
        raise CorruptManifest(f"empty manifest for {reference!r}")

    pulled: list[Layer] = []
    parent: str | None = None
    for lid in chain:
        if lid in store.layers:
            layer = store.layers[lid]
        else:
            layer_path = registry / "layers" / f"{lid}.layer"
            if not layer_path.is_file():
                raise CorruptManifest(f"manifest names missing layer {lid[:12]}")
            layer = _layer_from_text(layer_path.read_text(), str(layer_path))
        if layer.id != lid or layer.parent_id != parent:
            raise CorruptManifest(f"layer chain broken at {lid[:12]}")
        if layer_id(layer.parent_id, layer.directive, layer.size_bytes) != lid:
            raise CorruptManifest(f"layer {lid[:12]} fails hash verification")
        pulled.append(layer)
        parent = lid

    with store.locked():
        for layer in pulled:
            store.add_layer(layer)
        image = store.images.get(chain[-1])
        if image is None:
            image = Image(id=chain[-1], layers=tuple(chain))
            store.add_image(image)
        store.set_tag(reference, image.id)
    return image


def publish_image(store: Store, reference: str, registry: Path | str) -> int:
    """Export an image and its layers to a registry directory.

    Returns the number of layer files written; existing layers are left
    alone, so publishing is idempotent.
    """
    registry = Path(registry)
    image = store.images[store.resolve(reference)]
    manifest_path = _registry_manifest_path(registry, reference)
    try:
        (registry / "layers").mkdir(parents=True, exist_ok=True)
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        written = 0
        for lid in image.layers:
            target = registry / "layers" / f"{lid}.layer"
            if not target.exists():
                target.write_text(_layer_to_text(store.layers[lid]))
                written += 1
        manifest_path.write_text("".join(lid + "\n" for lid in image.layers))
    except OSError as exc:
        raise StoreUnwritable(f"cannot write registry {registry}: {exc}") from None
    return written


def store_usage(store: Store) -> StoreUsage:
    """Deduplication accounting across all images in the store."""
    image_bytes = {
        iid: sum(store.layers[lid].size_bytes for lid in image.layers)
        for iid, image in store.images.items()
    }
    total = sum(layer.size_bytes for layer in store.layers.values())
    return StoreUsage(
        distinct_layers=len(store.layers),
        total_bytes=total,
        image_bytes=image_bytes,
        shared_bytes=sum(image_bytes.values()) - total,
    )
