package corpus;

/**
 * Windows line endings.
 */
class Crlf {
    int a;

    int get() {
        return a;
    }
}
