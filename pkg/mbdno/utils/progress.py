import sys


class ProgressLine:
    """
    Single self-overwriting status line for long loops (generation, weight
    factors, training epochs).

    Nothing is written when the stream is not a terminal, so redirected
    output only contains log records.
    """

    def __init__(self, name, total, stream=None, label_width=30):
        self.name = name.ljust(label_width, ".")
        self.total = total
        self.stream = stream if stream is not None else sys.stderr
        self.enabled = getattr(self.stream, "isatty", lambda: False)()
        self.done = 0
        self._write("")

    def _write(self, status, end=""):
        if not self.enabled:
            return
        self.stream.write("\r{} {}{}".format(self.name, status, end))
        self.stream.flush()

    def update(self, done):
        self.done = done
        if self.total:
            percent = done * 100 // self.total
            self._write("{}/{} ({}%)".format(done, self.total, percent))

    def finish(self):
        self._write("done", end="\n")
