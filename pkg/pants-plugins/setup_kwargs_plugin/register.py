"""Fills version and long description of every python_distribution from the
VERSION, README.md and CHANGELOG.md files next to its BUILD file."""

from packaging.version import InvalidVersion, Version
from pants.backend.python.goals.setup_py import SetupKwargs, SetupKwargsRequest
from pants.backend.python.target_types import PythonProvidesField
from pants.engine.fs import DigestContents, GlobMatchErrorBehavior, PathGlobs
from pants.engine.rules import Get, collect_rules, rule
from pants.engine.target import Target
from pants.engine.unions import UnionRule


class SoftgradSetupKwargsRequest(SetupKwargsRequest):
    @classmethod
    def is_applicable(cls, _: Target) -> bool:
        return True


def rules():
    return [
        *collect_rules(),
        UnionRule(SetupKwargsRequest, SoftgradSetupKwargsRequest),
    ]


async def _read(path: str) -> str:
    contents = await Get(
        DigestContents,
        PathGlobs(
            [path],
            description_of_origin="`softgrad_setup_py()` plugin",
            glob_match_error_behavior=GlobMatchErrorBehavior.error,
        ),
    )
    return contents[0].content.decode().strip()


@rule
async def setup_kwargs_plugin(request: SoftgradSetupKwargsRequest) -> SetupKwargs:
    spec_path = request.target.address.spec_path
    package_name = request.target[PythonProvidesField].value.kwargs["name"]

    version = await _read(f"{spec_path}/VERSION")

    try:
        Version(version)
    except InvalidVersion as e:
        raise ValueError(f"Version {version} of {package_name} is not valid.") from e

    readme = await _read(f"{spec_path}/README.md")
    changelog = await _read(f"{spec_path}/CHANGELOG.md")

    return SetupKwargs(
        {
            **request.explicit_kwargs,
            "version": version,
            "long_description": f"{readme}\n{changelog}",
            "long_description_content_type": "text/markdown",
        },
        address=request.target.address,
    )
