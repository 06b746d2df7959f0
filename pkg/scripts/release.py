import argparse
import subprocess


def parse_args():
    parser = argparse.ArgumentParser()
    parser.add_argument(
        'release_type',
        choices=['major', 'minor', 'patch']
    )
    parser.add_argument('--no-push', action='store_true')
    return parser.parse_args()


def read_version(path):
    with open(path) as f:
        return f.read().strip()


def increment_version(version, release_type):
    import semver
    parsed = semver.VersionInfo.parse(version)
    bump = {
        'major': parsed.bump_major,
        'minor': parsed.bump_minor,
        'patch': parsed.bump_patch,
    }[release_type]
    return str(bump())


def write_version(path, version):
    with open(path, 'w') as f:
        f.write(version + '\n')


def require_clean_tree():
    status = subprocess.run(['git', 'status', '--porcelain'],
                            capture_output=True, text=True, check=True)
    if status.stdout.strip():
        raise SystemExit('working tree has uncommitted changes')


def git(*arguments):
    subprocess.run(['git', *arguments], check=True)


def run(release_type, no_push=False):
    require_clean_tree()
    version = read_version('version.txt')
    new_version = increment_version(version, release_type)
    write_version('version.txt', new_version)
    git('add', 'version.txt')
    git('commit', '-m', 'release version ' + new_version)
    git('tag', 'v' + new_version)
    if not no_push:
        git('push', '--tags')


if __name__ == '__main__':
    args = parse_args()
    run(**vars(args))
