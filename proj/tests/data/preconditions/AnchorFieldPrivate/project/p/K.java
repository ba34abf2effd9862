package p;

class K {
    int g(C c) {
        return c.f();
    }
}
