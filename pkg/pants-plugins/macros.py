def softgrad_setup_py(**kwargs):

    kwargs.setdefault("license", "LGPL")
    kwargs.setdefault("author", "Softgrad developers")
    kwargs.setdefault(
        "classifiers",
        [
            "Development Status :: 3 - Alpha",
            "Intended Audience :: Science/Research",
            "Topic :: Scientific/Engineering :: Artificial Intelligence",
            "License :: OSI Approved :: GNU Lesser General Public License v3 (LGPLv3)",
            "Programming Language :: Python :: 3.10",
            "Natural Language :: English",
        ],
    )

    kwargs["python_requires"] = "==3.10.*"

    return setup_py(**kwargs)


def softgrad_python_distribution(name: str, description: str, binaries=None, resources_globs=None, **kwargs):
    """Sources, VERSION/py.typed (plus optional data files) and a wheel/sdist of one package."""

    deps = [":VERSION"]

    if resources_globs:
        resources(
            name="data",
            sources=resources_globs,
        )
        deps.append(":data")

    python_sources(
        name=name,
        dependencies=deps,
    )

    resources(
        name="py.typed",
        sources=["py.typed"],
    )

    resources(
        name="VERSION",
        sources=["VERSION"],
    )

    kwargs["name"] = f"{name}_dist"
    kwargs.setdefault("dependencies", [])
    kwargs["dependencies"] += [":py.typed", f":{name}"]

    kwargs["provides"] = softgrad_setup_py(name=name, description=description)

    kwargs["sdist"] = True
    kwargs["wheel"] = True
    kwargs["wheel_config_settings"] = {"--global-option": ["--python-tag", "py310"]}

    if binaries:
        kwargs["entry_points"] = {"console_scripts": binaries}

    return python_distribution(**kwargs)


def softgrad_pex_binary(**kwargs):

    kwargs.setdefault("entry_point", f"{kwargs['name']}.py:main")
    kwargs.setdefault("layout", "packed")
    kwargs.setdefault("execution_mode", "venv")
    kwargs.setdefault("include_tools", True)

    return pex_binary(**kwargs)


def softgrad_python_tests(**kwargs):

    kwargs.setdefault("name", "tests")
    kwargs.setdefault("sources", ["test_*.py"])

    return python_tests(**kwargs)
