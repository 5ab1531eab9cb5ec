from src.utils.commandline import CommandLine


class CLIArgs(CommandLine):
    verbose = False
    progress = True
