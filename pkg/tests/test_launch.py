from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from crucible.launch import (
    Backend,
    BackendKind,
    EmptyCommandForNative,
    InvalidSpec,
    LaunchSpec,
    UnsupportedFeature,
    shell_line,
    synthesize_command,
)

from helpers import parse_docker_run

DOCKER = Backend(BackendKind.DOCKER)
RKT = Backend(BackendKind.RKT)
SHIFTER = Backend(BackendKind.SHIFTER)
NATIVE = Backend(BackendKind.NATIVE)
MOCK = Backend(BackendKind.MOCK)

STABLE = "quay.io/fenicsproject/stable"
STABLE_TAGGED = "quay.io/fenicsproject/stable:2016.1.0r1"


def _line(spec: LaunchSpec, backend: Backend) -> str:
    return " ".join(synthesize_command(spec, backend).argv)


def test_golden_interactive_session() -> None:
    spec = LaunchSpec(image_ref=STABLE, interactive=True)
    assert _line(spec, DOCKER) == "docker run -ti quay.io/fenicsproject/stable"


def test_golden_interactive_with_share_mount() -> None:
    spec = LaunchSpec(
        image_ref=STABLE,
        interactive=True,
        mounts=(("$(pwd)", "/home/fenics/shared"),),
    )
    assert _line(spec, DOCKER) == (
        "docker run -ti -v $(pwd):/home/fenics/shared quay.io/fenicsproject/stable"
    )


def test_golden_detached_notebook() -> None:
    spec = LaunchSpec(
        image_ref=STABLE,
        workdir="/home/fenics/shared",
        mounts=(("$(pwd)", "/home/fenics/shared"),),
        detach=True,
        ports=(("127.0.0.1", 8888, 8888),),
        command=("jupyter-notebook", "--ip=0.0.0.0"),
    )
    assert _line(spec, DOCKER) == (
        "docker run -w /home/fenics/shared -v $(pwd):/home/fenics/shared "
        "-d -p 127.0.0.1:8888:8888 quay.io/fenicsproject/stable "
        "jupyter-notebook --ip=0.0.0.0"
    )


def test_golden_shifter_run() -> None:
    spec = LaunchSpec(image_ref=STABLE_TAGGED, command=("./demo_poisson",))
    assert _line(spec, SHIFTER) == (
        "shifter --image=docker:quay.io/fenicsproject/stable:2016.1.0r1 ./demo_poisson"
    )


def test_shifter_keeps_existing_image_scheme() -> None:
    spec = LaunchSpec(image_ref="docker:img:1", command=("x",))
    assert _line(spec, SHIFTER) == "shifter --image=docker:img:1 x"


def test_docker_option_order_is_fixed() -> None:
    spec = LaunchSpec(
        image_ref="img",
        interactive=True,
        detach=True,
        workdir="/w",
        mounts=(("/h1", "/c1"), ("/h2", "/c2")),
        ports=(("127.0.0.1", 8000, 80),),
        env=(("A", "1"), ("B", "2")),
        command=("cmd", "arg"),
    )
    assert _line(spec, DOCKER) == (
        "docker run -ti -w /w -v /h1:/c1 -v /h2:/c2 -d "
        "-p 127.0.0.1:8000:80 -e A=1 -e B=2 img cmd arg"
    )


def test_mock_mirrors_docker_rendering() -> None:
    spec = LaunchSpec(image_ref="img", interactive=True, command=("x",))
    docker = synthesize_command(spec, DOCKER).argv
    mock = synthesize_command(spec, MOCK).argv
    assert mock[0] == "mock"
    assert mock[1:] == docker[1:]


def test_rkt_exec_form() -> None:
    spec = LaunchSpec(image_ref="img", interactive=True, command=("prog", "-a", "b"))
    assert _line(spec, RKT) == "rkt run --interactive img --exec prog -- -a b"
    bare = LaunchSpec(image_ref="img", command=("prog",))
    assert _line(bare, RKT) == "rkt run img --exec prog"
    default_cmd = LaunchSpec(image_ref="img")
    assert _line(default_cmd, RKT) == "rkt run img"


@pytest.mark.parametrize(
    "backend,field,value",
    [
        (RKT, "detach", True),
        (RKT, "workdir", "/w"),
        (RKT, "mounts", (("/a", "/b"),)),
        (RKT, "ports", (("127.0.0.1", 1, 2),)),
        (RKT, "env", (("A", "1"),)),
        (SHIFTER, "interactive", True),
        (SHIFTER, "detach", True),
        (SHIFTER, "workdir", "/w"),
        (SHIFTER, "mounts", (("/a", "/b"),)),
        (SHIFTER, "ports", (("127.0.0.1", 1, 2),)),
        (SHIFTER, "env", (("A", "1"),)),
        (NATIVE, "detach", True),
        (NATIVE, "workdir", "/w"),
        (NATIVE, "mounts", (("/a", "/b"),)),
        (NATIVE, "ports", (("127.0.0.1", 1, 2),)),
        (NATIVE, "env", (("A", "1"),)),
    ],
)
def test_unsupported_features_raise(backend: Backend, field: str, value) -> None:
    spec = LaunchSpec(image_ref="img", command=("x",), **{field: value})
    with pytest.raises(UnsupportedFeature) as err:
        synthesize_command(spec, backend)
    assert field in str(err.value)


def test_native_runs_command_verbatim_with_warnings() -> None:
    spec = LaunchSpec(image_ref="img", interactive=True, command=("./solver", "-n", "4"))
    rendered = synthesize_command(spec, NATIVE)
    assert rendered.argv == ("./solver", "-n", "4")
    codes = {w.code for w in rendered.warnings}
    assert codes == {"native-ignores-image", "native-ignores-interactive"}


def test_native_requires_a_command() -> None:
    with pytest.raises(EmptyCommandForNative):
        synthesize_command(LaunchSpec(image_ref="img"), NATIVE)


def test_spec_validation() -> None:
    with pytest.raises(InvalidSpec):
        LaunchSpec(image_ref="")
    with pytest.raises(InvalidSpec):
        LaunchSpec(image_ref="img", command=())
    with pytest.raises(InvalidSpec):
        LaunchSpec(image_ref="img", ports=(("127.0.0.1", 0, 80),))
    with pytest.raises(InvalidSpec):
        LaunchSpec(image_ref="img", ports=(("", 80, 80),))
    with pytest.raises(InvalidSpec):
        LaunchSpec(image_ref="img", mounts=(("", "/c"),))
    with pytest.raises(InvalidSpec):
        LaunchSpec(image_ref="img", env=(("A=B", "x"),))


def test_shell_line_quotes_only_when_needed() -> None:
    assert shell_line(["docker", "run", "-ti", "img"]) == "docker run -ti img"
    assert shell_line(["echo", "two words"]) == "echo 'two words'"
    assert shell_line(["echo", "it's"]) == "echo 'it'\\''s'"
    assert shell_line(["-v", "$(pwd):/home"]) == "-v $(pwd):/home"


_path = st.text(alphabet="abcdefgh/._-", min_size=1, max_size=12).filter(
    lambda s: ":" not in s
)
_name = st.text(alphabet="ABCDEFXYZ_", min_size=1, max_size=8)
_word = st.text(alphabet="abcdefgh0123456789.=_-", min_size=1, max_size=10)


@st.composite
def _docker_specs(draw):
    return LaunchSpec(
        image_ref=draw(_word.filter(lambda s: not s.startswith("-"))),
        interactive=draw(st.booleans()),
        detach=draw(st.booleans()),
        workdir=draw(st.one_of(st.none(), _path)),
        mounts=tuple(draw(st.lists(st.tuples(_path, _path), max_size=3))),
        ports=tuple(
            draw(
                st.lists(
                    st.tuples(
                        st.just("127.0.0.1"),
                        st.integers(1, 65535),
                        st.integers(1, 65535),
                    ),
                    max_size=3,
                )
            )
        ),
        env=tuple(draw(st.lists(st.tuples(_name, _word), max_size=3))),
        command=draw(st.one_of(st.none(), st.lists(_word, min_size=1, max_size=4).map(tuple))),
    )


@given(spec=_docker_specs())
def test_docker_rendering_round_trips(spec: LaunchSpec) -> None:
    # parse(render(spec)) == spec implies rendering is injective on
    # everything the docker backend honors
    rendered = synthesize_command(spec, DOCKER)
    assert parse_docker_run(rendered.argv) == spec


@given(spec=_docker_specs())
def test_rendering_is_deterministic(spec: LaunchSpec) -> None:
    assert synthesize_command(spec, DOCKER) == synthesize_command(spec, DOCKER)
