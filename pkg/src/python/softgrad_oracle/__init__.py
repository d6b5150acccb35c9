from softgrad import package_version


def version() -> str:
    return package_version(__name__)
