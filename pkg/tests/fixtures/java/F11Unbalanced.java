public class F11Unbalanced {
    public void broken() {
        if (x) {
            y();
    }
}
